// Copyright 2026 The Persuade Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// One PASS/FAIL line per acceptance criterion. Exit status is nonzero when any
// criterion fails. Tolerances and budgets live in the constants below.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "metric_check.hpp"
#include "oracles.hpp"
#include "persuade/active_learning.hpp"
#include "persuade/ledger.hpp"
#include "persuade/metrics.hpp"
#include "persuade/service.hpp"
#include "synthetic.hpp"

using namespace persuade;

namespace {

constexpr double kGradTol = 1e-4;
constexpr double kGradSeconds = 10;
constexpr double kEntropyTol = 1e-9;
constexpr double kEntropySeconds = 5;
constexpr double kAnchorTol = 1e-9;
constexpr double kAdjustedKappaTol = 1e-4;
constexpr double kOverfitTop1 = 0.95;
constexpr int kOverfitEpochs = 200;
constexpr double kOverfitSeconds = 120;
constexpr double kGainPoints = 0.02;
constexpr double kGainSeconds = 600;
constexpr double kMetricTol = 1e-9;
constexpr double kServiceSeconds = 180;
constexpr int kMemorizeSteps = 500;

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Seconds = std::chrono::duration<double>;

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

Outcome shape_suite() {
    const ModelConfig mc;  // defaults
    const auto tax = load_taxonomy(default_taxonomy_path());
    FusionModel model(mc, testkit::class_ids(tax), tax.hash(), Vocabulary(), 1);
    const auto raw = testkit::stub_features("shape", mc.extractor);
    const Matrix bundle = model.bundle(raw);
    const Matrix enc = model.encode(bundle);
    const auto pred = model.predict_sample(raw);
    const bool in_range = (pred.probs.array() >= 0.0).all() && (pred.probs.array() <= 1.0).all();
    const bool ok = bundle.rows() == 114 && bundle.cols() == 256 && enc.rows() == bundle.rows() &&
                    enc.cols() == bundle.cols() && pred.probs.size() == static_cast<Eigen::Index>(tax.size()) &&
                    in_range;
    return {ok, fmt("bundle %ldx%ld, encoded %ldx%ld, |p|=%ld for %zu strategies, entries in [0,1]: %s",
                    bundle.rows(), bundle.cols(), enc.rows(), enc.cols(), pred.probs.size(), tax.size(),
                    in_range ? "yes" : "no")};
}

// Direct loss of the pooling + head + BCE path, written out independently.
double head_loss(const Matrix& enc, const Vector& w_pool, const Matrix& w_out, const Vector& b_out, const Vector& y) {
    const Vector s = enc * w_pool;
    const double m = s.maxCoeff();
    std::vector<double> a(static_cast<std::size_t>(s.size()));
    double z = 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i) z += a[static_cast<std::size_t>(i)] = std::exp(s[i] - m);
    Vector pooled = Vector::Zero(enc.cols());
    for (Eigen::Index i = 0; i < enc.rows(); ++i) pooled += (a[static_cast<std::size_t>(i)] / z) * enc.row(i).transpose();
    std::vector<double> p, t;
    for (Eigen::Index j = 0; j < w_out.cols(); ++j) {
        p.push_back(1.0 / (1.0 + std::exp(-(w_out.col(j).dot(pooled) + b_out[j]))));
        t.push_back(y[j]);
    }
    return oracle::bce(p, t);
}

Outcome gradient_check() {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> n01;
    auto rnd = [&](int r, int c, double scale) {
        Matrix m(r, c);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * n01(rng);
        return m;
    };
    const double h = 1e-6;
    double worst = 0.0;
    int checked = 0;
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix enc = rnd(6, 8, 1.0);
        const Vector w_pool = rnd(8, 1, 0.5).col(0);
        const Matrix w_out = rnd(8, 4, 0.3);
        const Vector b_out = rnd(4, 1, 0.5).col(0);
        Vector y = Vector::Zero(4);
        y[static_cast<Eigen::Index>(rng() % 4)] = 1.0;
        const auto g = pool_head_gradients(enc, w_pool, w_out, b_out, y);
        auto rel = [&](double num, double ana) {
            worst = std::max(worst, std::abs(num - ana) / std::max({std::abs(num), std::abs(ana), 1e-7}));
            ++checked;
        };
        for (int i = 0; i < 8; ++i) {
            Vector up = w_pool, dn = w_pool;
            up[i] += h;
            dn[i] -= h;
            rel((head_loss(enc, up, w_out, b_out, y) - head_loss(enc, dn, w_out, b_out, y)) / (2 * h), g.d_w_pool[i]);
        }
        for (Eigen::Index i = 0; i < w_out.size(); ++i) {
            Matrix up = w_out, dn = w_out;
            up.data()[i] += h;
            dn.data()[i] -= h;
            rel((head_loss(enc, w_pool, up, b_out, y) - head_loss(enc, w_pool, dn, b_out, y)) / (2 * h),
                g.d_w_out.data()[i]);
        }
        for (int i = 0; i < 4; ++i) {
            Vector up = b_out, dn = b_out;
            up[i] += h;
            dn[i] -= h;
            rel((head_loss(enc, w_pool, w_out, up, y) - head_loss(enc, w_pool, w_out, dn, y)) / (2 * h), g.d_b_out[i]);
        }
    }
    return {worst < kGradTol, fmt("max relative error %.2e over %d partials (tol %.0e)", worst, checked, kGradTol)};
}

Outcome entropy_oracle() {
    std::mt19937_64 rng(23);
    std::normal_distribution<double> n01;
    std::uniform_int_distribution<int> len(2, 30);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        Vector p(len(rng));
        std::vector<double> raw;
        for (Eigen::Index j = 0; j < p.size(); ++j) {
            p[j] = 1.0 / (1.0 + std::exp(-3.0 * n01(rng)));
            raw.push_back(p[j]);
        }
        worst = std::max(worst, std::abs(entropy_score(normalize_probs(p)) - oracle::entropy(raw)));
    }

    std::vector<std::string> ids;
    std::map<std::string, Vector> probs;
    std::vector<double> entropies;
    for (int i = 0; i < 200; ++i) {
        const std::string id = fmt("pool%03d", (i * 37) % 200);
        Vector p(8);
        for (Eigen::Index j = 0; j < 8; ++j) p[j] = 1.0 / (1.0 + std::exp(-2.0 * n01(rng)));
        if (i % 25 == 0 && i > 0) p = probs.at(ids.front());  // exact ties go by id
        probs[id] = p;
        ids.push_back(id);
        std::vector<double> v(p.data(), p.data() + p.size());
        entropies.push_back(oracle::entropy(v));
    }
    const auto ranked = rank_pool(ids, [&](const std::string& id) { return probs.at(id); }, uncertainty);
    const auto expect = oracle::rank(ids, entropies);
    bool same = ranked.size() == expect.size();
    for (std::size_t i = 0; same && i < ranked.size(); ++i) same = ranked[i].sample_id == expect[i];
    return {worst < kEntropyTol && same,
            fmt("max |entropy - oracle| %.2e over 1000 vectors; 200-sample ranking %s brute force", worst,
                same ? "equals" : "differs from")};
}

Outcome analytic_anchors() {
    const double h16 = entropy_score(Vector::Constant(16, 1.0 / 16.0));
    const double bce = strategy_loss(Vector::Constant(1, 0.5), Vector::Constant(1, 1.0));
    const double d = dice(std::set<std::string>{"a", "b"}, std::set<std::string>{"b", "c"});
    const double adj = adjust_kappa(0.55, 0.76);
    const bool ok = std::abs(h16 - std::log(16.0)) < kAnchorTol && std::abs(bce - std::log(2.0)) < kAnchorTol &&
                    d == 0.5 && std::abs(adj - 0.7237) < kAdjustedKappaTol;
    return {ok, fmt("H(uniform16)=%.10f, BCE(1,0.5)=%.10f, dice=%.3f, adjusted kappa=%.6f", h16, bce, d, adj)};
}

Outcome overfit() {
    auto mc = testkit::small_model();
    const int n_classes = 8;
    const auto data = testkit::planted_examples(50, mc.extractor, n_classes, 1.0, 3);
    std::vector<std::string> ids;
    for (int i = 0; i < n_classes; ++i) ids.push_back("c" + std::to_string(i));
    FusionModel model(mc, ids, "planted", Vocabulary(), 3);
    TrainConfig tc;
    tc.learning_rate = 1e-3;
    tc.batch_size = 10;
    tc.epochs = kOverfitEpochs;
    tc.lambda_gen = 0.0;
    tc.seed = 3;
    tc.eval_each_epoch = true;
    double best = 0.0;
    int reached = -1;
    train(model, data, tc, [&](const EpochLog& l) {
        best = std::max(best, l.top1);
        if (l.top1 >= kOverfitTop1) {
            reached = l.epoch;
            return false;
        }
        return true;
    });
    if (reached < 0) return {false, fmt("best training top-1 %.3f after %d epochs", best, kOverfitEpochs)};
    return {true, fmt("training top-1 %.3f reached at epoch %d (limit %d)", best, reached, kOverfitEpochs)};
}

Outcome al_gain() {
    const int P = 4, pool_n = 500, test_n = 500, budget = 150, seeds = 5;
    auto mc = testkit::small_model();
    mc.extractor.n_roi = 0;
    mc.extractor.n_cap = 0;
    mc.extractor.backbone_dim = 24;
    const auto teacher = testkit::LinearTeacher::random(mc.extractor.backbone_dim, P, 99);
    std::vector<std::string> ids;
    for (int i = 0; i < P; ++i) ids.push_back("c" + std::to_string(i));

    std::map<std::string, RawFeatures> feats;
    std::map<std::string, std::size_t> truth;
    std::vector<std::string> pool, test;
    for (int i = 0; i < pool_n + test_n; ++i) {
        const std::string id = (i < pool_n ? "p" : "t") + std::to_string(i);
        feats[id] = testkit::stub_features(id, mc.extractor);
        truth[id] = teacher.label_of(feats[id]);
        (i < pool_n ? pool : test).push_back(id);
    }
    auto example = [&](const std::string& id, const StrategySet& s) {
        TrainingExample ex;
        ex.sample_id = id;
        ex.raw = feats.at(id);
        ex.y = Vector::Zero(P);
        for (const auto& l : s.ids()) ex.y[std::stoi(l.substr(1))] = 1.0;
        return ex;
    };
    std::vector<TrainingExample> held_out;
    for (const auto& id : test) held_out.push_back(example(id, StrategySet{ids[truth.at(id)]}));

    double mean[2] = {0.0, 0.0};
    for (int seed = 0; seed < seeds; ++seed) {
        for (int arm = 0; arm < 2; ++arm) {
            ALConfig cfg;
            cfg.k = 10;
            cfg.label_budget = budget;
            cfg.seed = 1000 + static_cast<std::uint64_t>(seed);
            cfg.acquisition = arm == 0 ? Acquisition::Entropy : Acquisition::Random;
            cfg.plateau_rounds = 0;
            cfg.train.epochs = 60;
            cfg.train.learning_rate = 3e-3;
            cfg.train.batch_size = 10;
            cfg.train.lambda_gen = 0.0;
            cfg.train.seed = static_cast<std::uint64_t>(seed);
            cfg.train.eval_each_epoch = false;
            FusionModel model(mc, ids, "teacher", Vocabulary(), static_cast<std::uint64_t>(seed));
            RoundContext ctx;
            ctx.make_example = example;
            ctx.features = [&](const std::string& id) { return feats.at(id); };
            ctx.oracle = [&](const std::vector<std::string>& sel) {
                std::map<std::string, StrategySet> o;
                for (const auto& id : sel) o[id] = StrategySet{ids[truth.at(id)]};
                return o;
            };
            ctx.validation = held_out;
            std::map<std::string, StrategySet> labels;
            RoundOutcome out{initial_state(pool, cfg.k), StopReason::None};
            while (out.stop == StopReason::None) out = run_round(out.state, model, labels, ctx, cfg);
            if (out.state.labeled_ids.size() != static_cast<std::size_t>(budget))
                return {false, fmt("arm %d seed %d stopped at %zu labels", arm, seed, out.state.labeled_ids.size())};
            mean[arm] += out.state.history.back().metrics.top1 / seeds;
        }
    }
    const double gain = mean[0] - mean[1];
    return {gain >= kGainPoints - 1e-12,
            fmt("held-out top-1 at %d labels: entropy %.4f vs random %.4f (gain %+.2f points, need %+.0f)", budget,
                mean[0], mean[1], 100 * gain, 100 * kGainPoints)};
}

Outcome metric_oracle() {
    double worst = 0.0;
    bool monotone = true, ordered = true;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const auto g = testkit::metric_oracle_gap(seed);
        worst = std::max(worst, g.worst());
        monotone = monotone && g.monotone_in_k;
        ordered = ordered && g.top1_le_top3;
    }
    return {worst < kMetricTol && monotone && ordered,
            fmt("50 corpora: max gap %.2e, monotone in k: %s, top1<=top3: %s", worst, monotone ? "yes" : "no",
                ordered ? "yes" : "no")};
}

struct TempService {
    std::filesystem::path root;
    std::filesystem::path manifest;
    ServiceConfig cfg;
    TempService(const std::string& tag, int n) : root(testkit::temp_dir(tag)) {
        const auto tax = load_taxonomy(default_taxonomy_path());
        manifest = testkit::write_corpus(root / "corpus", n, tax, 11);
        cfg = testkit::small_service_config(root / "data");
    }
    ~TempService() { std::filesystem::remove_all(root); }
};

std::vector<std::string> slots(AnnotationService& svc, int round_t, const std::string& sample) {
    auto as = svc.store().assignments(round_t, sample);
    std::sort(as.begin(), as.end(), [](const Assignment& a, const Assignment& b) { return a.slot < b.slot; });
    std::vector<std::string> out;
    for (const auto& a : as) out.push_back(a.annotator_id);
    return out;
}

SubmitResult submit(AnnotationService& svc, const std::string& sample, const std::string& who, StrategySet labels) {
    AnnotationRecord r;
    r.round_t = 0;
    r.sample_id = sample;
    r.annotator_id = who;
    r.labels = std::move(labels);
    return svc.submit_annotation(r);
}

Outcome resolution_determinism() {
    const StrategySet X{"scarcity"}, Y{"authority"}, XY{"scarcity", "authority"}, XZ{"scarcity", "eager"};
    struct Case {
        std::string name;
        StrategySet a, b;
        std::optional<StrategySet> c;
        StrategySet want;
    };
    const std::vector<Case> cases{
        {"unanimity", XY, XY, std::nullopt, XY},
        {"disjoint then third", X, Y, Y, Y},
        {"2-of-3 majority", X, Y, XZ, X},
    };
    std::vector<std::string> notes;
    bool ok = true;
    for (const auto& c : cases) {
        for (bool swap : {false, true}) {
            TempService env("accept-resolve", 4);
            AnnotationService svc(env.cfg);
            svc.ingest(env.manifest);
            svc.open_round(1, std::vector<std::string>{"ad1000"});
            const auto pair = slots(svc, 0, "ad1000");
            SubmitResult last;
            if (swap) {
                submit(svc, "ad1000", pair[1], c.b);
                last = submit(svc, "ad1000", pair[0], c.a);
            } else {
                submit(svc, "ad1000", pair[0], c.a);
                last = submit(svc, "ad1000", pair[1], c.b);
            }
            if (!c.c) {
                ok = ok && last.outcome.status == SampleStatus::Resolved && last.outcome.resolution &&
                     last.outcome.resolution->method == ResolutionMethod::Agreement;
            } else {
                ok = ok && last.outcome.status == SampleStatus::Disagreed && last.outcome.third_annotator.has_value();
                const auto all = slots(svc, 0, "ad1000");
                if (all.size() != 3) return {false, c.name + ": no third annotator assigned"};
                last = submit(svc, "ad1000", all[2], *c.c);
            }
            const auto res = svc.store().resolution(0, "ad1000");
            if (!res || !(res->final_labels == c.want)) {
                ok = false;
                notes.push_back(c.name + (swap ? " (swapped)" : "") + " gave the wrong final labels");
            }
        }
    }

    // Pure vote resolution under random permutations of the pair.
    const auto tax = load_taxonomy(default_taxonomy_path());
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<std::size_t> n(1, 3), pick(0, 5);
    auto random_set = [&] {
        std::set<std::string> s;
        const auto want = n(rng);
        while (s.size() < want) s.insert(tax.at(pick(rng)).id);
        return StrategySet(std::vector<std::string>(s.begin(), s.end()));
    };
    int mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto a = random_set(), b = random_set(), c = random_set();
        if (!(resolve_votes(a, b, std::nullopt, tax).final_labels == resolve_votes(b, a, std::nullopt, tax).final_labels) ||
            !(resolve_votes(a, b, c, tax).final_labels == resolve_votes(b, a, c, tax).final_labels))
            ++mismatches;
    }
    ok = ok && mismatches == 0;
    std::string detail = fmt("3 cases x 2 submission orders through the service; %d/1000 permutation mismatches",
                             mismatches);
    for (const auto& s : notes) detail += "; " + s;
    return {ok, detail};
}

Outcome service_round_trip() {
    TempService env("accept-service", 20);
    AnnotationService svc(env.cfg);
    const auto ing = svc.ingest(env.manifest);
    const auto opened = svc.open_round();
    for (const auto& id : opened.sample_ids) {
        const auto pair = slots(svc, opened.round_t, id);
        const StrategySet labels{svc.taxonomy().at(std::stoul(id.substr(2)) % svc.taxonomy().size()).id};
        submit(svc, id, pair[0], labels);
        submit(svc, id, pair[1], labels);
    }
    const auto status = svc.round_status(opened.round_t);
    const auto closed = svc.close_round_and_train(opened.round_t);
    const auto state = svc.state();
    const auto replayed = replay_ledger(env.cfg.data_dir / "ledger.jsonl");
    const bool ok = ing.ingested == 20 && status.closable && status.resolved == opened.sample_ids.size() &&
                    !closed.checkpoint_hash.empty() && state.labeled_ids.size() == opened.sample_ids.size() &&
                    replayed == state;
    return {ok, fmt("ingested %zu, round of %zu resolved and closed (checkpoint %.12s), ledger replay %s", ing.ingested,
                    opened.sample_ids.size(), closed.checkpoint_hash.c_str(),
                    replayed == state ? "identical" : "DIFFERS")};
}

Outcome teacher_forcing() {
    const std::string gold = "i should buy this phone because it never drops a call";
    auto mc = testkit::small_model();
    mc.dropout = 0.0;
    mc.max_target_len = 16;
    const std::vector<std::string> sents{gold};
    FusionModel model(mc, {"a", "b"}, "tf", Vocabulary::build(sents, 1), 2);
    TrainingExample ex;
    ex.sample_id = "tf";
    ex.raw = testkit::stub_features("tf", mc.extractor);
    ex.y = (Vector(2) << 1, 0).finished();
    ex.tokens = model.vocab().encode(gold, mc.max_target_len);
    const std::vector<TrainingExample> data{ex};
    TrainConfig tc;
    tc.learning_rate = 3e-3;
    tc.batch_size = 1;
    tc.epochs = kMemorizeSteps;
    tc.lambda_gen = 1.0;
    tc.eval_each_epoch = false;
    int steps = -1;
    std::string last;
    train(model, data, tc, [&](const EpochLog& l) {
        last = model.generate_action_reason(ex.raw);
        if (last == gold) {
            steps = l.epoch;
            return false;
        }
        return true;
    });
    if (steps < 0) return {false, fmt("after %d steps greedy decode is \"%s\"", kMemorizeSteps, last.c_str())};
    return {true, fmt("greedy decode equals the gold sentence after %d steps (limit %d)", steps, kMemorizeSteps)};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Outcome()> run;
        double budget_s;  // 0 = no runtime limit
    };
    const std::vector<Criterion> criteria{
        {"shape suite", shape_suite, 0},
        {"gradient check", gradient_check, kGradSeconds},
        {"entropy oracle", entropy_oracle, kEntropySeconds},
        {"analytic anchors", analytic_anchors, 0},
        {"overfit experiment", overfit, kOverfitSeconds},
        {"active-learning gain", al_gain, kGainSeconds},
        {"metric oracle equivalence", metric_oracle, 0},
        {"resolution determinism", resolution_determinism, 0},
        {"service round-trip", service_round_trip, kServiceSeconds},
        {"teacher-forcing memorization", teacher_forcing, 0},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = Seconds(std::chrono::steady_clock::now() - t0).count();
        if (c.budget_s > 0 && secs >= c.budget_s) {
            o.pass = false;
            o.detail += fmt("; over the %.0f s budget", c.budget_s);
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS " : "FAIL ") << c.name << ": " << o.detail << fmt(" [%.2f s]", secs) << std::endl;
    }
    std::cout << (failed ? fmt("%d criterion(s) failed", failed) : std::string("all criteria passed")) << std::endl;
    return failed ? 1 : 0;
}
