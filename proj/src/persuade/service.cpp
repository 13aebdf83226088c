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

#include "persuade/service.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>

#include "persuade/checkpoint.hpp"
#include "persuade/image.hpp"

namespace persuade {

using nlohmann::json;

void apply_config_json(ServiceConfig& cfg, const json& j) {
    try {
        if (j.contains("extractors")) cfg.extractors = j["extractors"].get<std::string>();
        if (j.contains("taxonomy")) cfg.taxonomy_path = j["taxonomy"].get<std::string>();
        if (j.contains("roster")) cfg.roster = j["roster"].get<std::vector<std::string>>();
        if (j.contains("model")) j["model"].get_to(cfg.model);
        if (j.contains("train")) j["train"].get_to(cfg.al.train);
        if (j.contains("k")) cfg.al.k = j["k"].get<std::size_t>();
        if (j.contains("seed")) cfg.al.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("retrain")) {
            const auto mode = j["retrain"].get<std::string>();
            if (mode != "warm" && mode != "scratch") throw InvalidArgumentError("config: retrain must be 'scratch' or 'warm'");
            cfg.al.retrain = mode == "warm" ? RetrainMode::WarmStart : RetrainMode::FromScratch;
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
}

ServiceConfig load_service_config(const std::filesystem::path& data_dir) {
    ServiceConfig cfg;
    cfg.data_dir = data_dir;
    const auto file = data_dir / "config.json";
    if (std::filesystem::exists(file)) {
        std::ifstream is(file);
        json j;
        try {
            j = json::parse(is);
        } catch (const json::exception& e) {
            throw ParseError("config.json: " + std::string(e.what()));
        }
        apply_config_json(cfg, j);
    }
    if (const char* e = std::getenv("PERSUADE_EXTRACTORS"); e && *e) cfg.extractors = e;
    if (const char* t = std::getenv("PERSUADE_TAXONOMY"); t && *t) cfg.taxonomy_path = t;
    return cfg;
}

VoteOutcome resolve_votes(const StrategySet& first, const StrategySet& second,
                          const std::optional<StrategySet>& third, const Taxonomy& taxonomy) {
    std::vector<int> votes(taxonomy.size(), 0);
    auto count = [&](const StrategySet& s) {
        for (const auto& id : std::set<std::string>(s.ids().begin(), s.ids().end())) ++votes[taxonomy.index_of(id)];
    };
    count(first);
    count(second);
    VoteOutcome out;
    if (!third) {
        std::vector<std::string> both;
        for (std::size_t i = 0; i < votes.size(); ++i)
            if (votes[i] == 2) both.push_back(taxonomy.at(i).id);
        out.final_labels = StrategySet(both);
        out.disagreed = both.empty();
        out.method = ResolutionMethod::Agreement;
        return out;
    }
    count(*third);
    std::vector<std::size_t> winners;
    for (std::size_t i = 0; i < votes.size(); ++i)
        if (votes[i] >= 2) winners.push_back(i);
    std::stable_sort(winners.begin(), winners.end(), [&](std::size_t a, std::size_t b) { return votes[a] > votes[b]; });
    if (winners.size() > kMaxStrategiesPerAd) winners.resize(kMaxStrategiesPerAd);
    std::sort(winners.begin(), winners.end());
    out.method = ResolutionMethod::ThirdAnnotatorMajority;
    if (winners.empty()) {
        std::vector<std::size_t> idx;
        for (const auto& id : third->ids()) idx.push_back(taxonomy.index_of(id));
        std::sort(idx.begin(), idx.end());
        winners = idx;
    }
    std::vector<std::string> ids;
    for (auto i : winners) ids.push_back(taxonomy.at(i).id);
    out.final_labels = StrategySet(ids);
    return out;
}

std::vector<Assignment> assign_pairs(int round_t, const std::vector<std::string>& sample_ids,
                                     const std::vector<std::string>& roster) {
    if (roster.size() < 3)
        throw RosterTooSmallError("need at least 3 annotators, roster has " + std::to_string(roster.size()));
    std::vector<Assignment> out;
    const std::size_t n = roster.size();
    for (std::size_t i = 0; i < sample_ids.size(); ++i) {
        out.push_back({round_t, sample_ids[i], roster[(2 * i) % n], 1});
        out.push_back({round_t, sample_ids[i], roster[(2 * i + 1) % n], 2});
    }
    return out;
}

const char* sample_status_name(SampleStatus s) {
    switch (s) {
        case SampleStatus::Pending: return "pending";
        case SampleStatus::PartiallyAnnotated: return "partially-annotated";
        case SampleStatus::Disagreed: return "disagreed";
        case SampleStatus::Resolved: return "resolved";
    }
    return "unknown";
}

namespace {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32), static_cast<std::uint32_t>(b),
                      static_cast<std::uint32_t>(b >> 32)};
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

bool is_url(const std::string& ref) { return ref.find("://") != std::string::npos; }

std::string taxonomy_path_or_default(const std::filesystem::path& p) {
    return p.empty() ? default_taxonomy_path().string() : p.string();
}

}  // namespace

AnnotationService::AnnotationService(ServiceConfig cfg)
    : cfg_(std::move(cfg)),
      taxonomy_(load_taxonomy(taxonomy_path_or_default(cfg_.taxonomy_path))),
      store_(std::make_unique<Store>(cfg_.data_dir / "persuade.db")),
      ledger_(cfg_.data_dir / "ledger.jsonl"),
      cache_(cfg_.data_dir / "cache"),
      suite_(make_suite(cfg_.extractors)) {
    cfg_.model.validate();
    cfg_.al.train.validate();
    if (cfg_.al.k == 0) throw InvalidArgumentError("service: k must be >= 1");

    if (auto s = store_->get_kv("al_state")) {
        state_ = state_from_json(json::parse(*s));
    } else {
        state_.k = cfg_.al.k;
        persist_state(state_);
    }
    if (ledger_.read().empty()) ledger_.append({{"type", "init"}, {"k", state_.k}, {"ids", state_.pool_ids}});

    if (auto path = store_->get_kv("checkpoint_path")) {
        auto ck = load_checkpoint(*path, taxonomy_.hash());
        // Features must match the published model, whatever the current config says.
        cfg_.model = ck.model->config();
        published_ = std::shared_ptr<const FusionModel>(std::move(ck.model));
        published_hash_ = ck.hash;
    }
}

void AnnotationService::persist_state(const ALState& s) { store_->put_kv("al_state", state_to_json(s).dump()); }

ALState AnnotationService::state() const {
    std::lock_guard lock(state_mu_);
    return state_;
}

std::shared_ptr<const FusionModel> AnnotationService::published_model() const {
    std::lock_guard lock(state_mu_);
    return published_;
}

std::optional<std::string> AnnotationService::published_checkpoint_hash() const {
    std::lock_guard lock(state_mu_);
    if (!published_) return std::nullopt;
    return published_hash_;
}

std::optional<EvalReport> AnnotationService::latest_metrics() const {
    auto m = store_->get_kv("latest_metrics");
    if (!m) return std::nullopt;
    return json::parse(*m).get<EvalReport>();
}

IngestResult AnnotationService::ingest(const std::filesystem::path& manifest) {
    return ingest_samples(read_manifest(manifest));
}

IngestResult AnnotationService::ingest_samples(const std::vector<AdSample>& samples) {
    std::set<std::string> seen;
    std::vector<std::string> dupes;
    for (const auto& s : samples)
        if (!seen.insert(s.sample_id).second) dupes.push_back(s.sample_id);
    if (!dupes.empty()) {
        std::string msg = "duplicate sample ids:";
        for (const auto& d : dupes) msg += " " + d;
        throw DuplicateIdError(msg);
    }

    std::vector<StoredSample> fresh;
    for (const auto& s : samples) {
        if (store_->sample(s.sample_id)) continue;
        if (auto err = s.gold_labels ? validate_label_set(*s.gold_labels, taxonomy_) : std::nullopt)
            throw ValidationError("sample '" + s.sample_id + "': " + *err);
        StoredSample row{s, 0, 0};
        if (!is_url(s.image_ref)) {
            const Image img = decode_image(s.image_ref);
            row.width = img.width;
            row.height = img.height;
        }
        fresh.push_back(std::move(row));
    }

    IngestResult res;
    std::vector<std::string> added, pooled;
    std::lock_guard lock(state_mu_);
    ALState next = state_;
    store_->transaction([&] {
        for (const auto& row : fresh) {
            if (!store_->insert_sample(row)) continue;
            added.push_back(row.sample.sample_id);
            // val/test samples are held out for evaluation and never queried
            if (row.sample.split == "train" && !next.labeled_ids.count(row.sample.sample_id)) {
                next.pool_ids.insert(row.sample.sample_id);
                pooled.push_back(row.sample.sample_id);
            }
        }
        persist_state(next);
    });
    if (!pooled.empty()) ledger_.append({{"type", "ingest"}, {"ids", pooled}});
    state_ = std::move(next);
    res.ingested = added.size();
    res.skipped = samples.size() - added.size();
    return res;
}

RawFeatures AnnotationService::features(const AdSample& sample) const {
    const auto key = cache_.key(sample.sample_id, suite_.version, cfg_.model.extractor);
    if (auto hit = cache_.get(key)) return *hit;
    Image img;
    if (is_url(sample.image_ref)) throw DecodeError("sample '" + sample.sample_id + "': remote images are not fetched");
    img = decode_image(sample.image_ref);
    RawFeatures raw;
    {
        std::unique_lock lock(suite_mu_, std::defer_lock);
        if (!suite_.concurrent_safe) lock.lock();
        raw = extract_raw({sample.sample_id}, img, sample.ocr_text, cfg_.model.extractor, suite_);
    }
    cache_.put(key, raw);
    return raw;
}

std::optional<int> AnnotationService::current_round() const {
    for (const auto& r : store_->rounds())
        if (r.open) return r.round_t;
    return std::nullopt;
}

RoundOpened AnnotationService::open_round(std::optional<std::size_t> k, std::optional<std::vector<std::string>> ids) {
    std::lock_guard round_lock(round_mu_);
    if (auto open = current_round()) throw ConflictError("round " + std::to_string(*open) + " is still open");
    if (cfg_.roster.size() < 3)
        throw RosterTooSmallError("need at least 3 annotators, roster has " + std::to_string(cfg_.roster.size()));
    const ALState st = state();
    if (st.pool_ids.empty()) throw EmptyPoolError("open_round: the unlabeled pool is empty");

    std::vector<std::string> selected;
    EntropyStats entropy;
    if (ids) {
        std::set<std::string> uniq;
        for (const auto& id : *ids) {
            if (!st.pool_ids.count(id)) throw ValidationError("sample '" + id + "' is not in the unlabeled pool");
            if (!uniq.insert(id).second) throw ValidationError("sample '" + id + "' listed twice");
        }
        if (ids->empty()) throw ValidationError("open_round: no sample ids given");
        selected = *ids;
    } else {
        const std::size_t n = k.value_or(st.k);
        if (n == 0) throw ValidationError("open_round: k must be >= 1");
        if (auto model = published_model()) {
            const auto ranked = rank_current_pool();
            selected = select_batch(ranked, n);
            entropy = entropy_stats(std::span(ranked).first(selected.size()));
        } else {
            selected = random_batch(st, n, mix_seed(cfg_.al.seed, static_cast<std::uint64_t>(st.round_t)));
        }
    }

    RoundOpened out;
    out.round_t = st.round_t;
    out.sample_ids = selected;
    out.assignments = assign_pairs(out.round_t, selected, cfg_.roster);
    store_->transaction([&] {
        store_->insert_round(out.round_t);
        for (const auto& a : out.assignments) store_->insert_assignment(a);
        store_->put_kv("round_entropy_" + std::to_string(out.round_t),
                       json{{"mean", entropy.mean}, {"min", entropy.min}, {"max", entropy.max}}.dump());
    });
    ledger_.append({{"type", "open_round"}, {"round_t", out.round_t}, {"selected", selected}});
    return out;
}

std::vector<PendingAssignment> AnnotationService::pending_assignments(int round_t, const std::string& annotator_id) const {
    if (!store_->round(round_t)) throw UnknownRoundError("round " + std::to_string(round_t) + " does not exist");
    std::vector<PendingAssignment> out;
    for (const auto& a : store_->assignments(round_t)) {
        if (a.annotator_id != annotator_id) continue;
        bool done = false;
        for (const auto& r : store_->annotations(round_t, a.sample_id))
            if (r.annotator_id == annotator_id) done = true;
        if (done || store_->resolution(round_t, a.sample_id)) continue;
        const auto s = store_->sample(a.sample_id);
        if (!s) continue;
        PendingAssignment p;
        p.sample_id = a.sample_id;
        p.image_url = "/api/images/" + a.sample_id;
        p.ocr_preview = s->sample.ocr_text.substr(0, cfg_.ocr_preview_chars);
        p.width = s->width;
        p.height = s->height;
        p.slot = a.slot;
        out.push_back(std::move(p));
    }
    return out;
}

SampleStatus AnnotationService::sample_status(int round_t, const std::string& sample_id) const {
    if (store_->resolution(round_t, sample_id)) return SampleStatus::Resolved;
    const auto as = store_->assignments(round_t, sample_id);
    if (as.size() >= 3) return SampleStatus::Disagreed;
    return store_->annotations(round_t, sample_id).empty() ? SampleStatus::Pending : SampleStatus::PartiallyAnnotated;
}

SubmitResult AnnotationService::submit_annotation(const AnnotationRecord& record) {
    const auto round = store_->round(record.round_t);
    if (!round) throw UnknownRoundError("round " + std::to_string(record.round_t) + " does not exist");
    if (!round->open) throw ConflictError("round " + std::to_string(record.round_t) + " is closed");
    const auto as = store_->assignments(record.round_t, record.sample_id);
    const bool assigned = std::any_of(as.begin(), as.end(), [&](const Assignment& a) { return a.annotator_id == record.annotator_id; });
    if (!assigned)
        throw NoAssignmentError("annotator '" + record.annotator_id + "' has no assignment for '" + record.sample_id +
                                "' in round " + std::to_string(record.round_t));
    if (auto err = validate_label_set(record.labels, taxonomy_)) throw ValidationError(*err);

    SubmitResult out;
    store_->transaction([&] {
        auto [stored, replaced] = store_->upsert_annotation(record);
        out.record = stored;
        out.replaced = replaced;
        if (replaced)
            store_->audit("annotation_replaced", json{{"record_id", stored.record_id},
                                                      {"round_t", stored.round_t},
                                                      {"sample_id", stored.sample_id},
                                                      {"annotator_id", stored.annotator_id},
                                                      {"labels", stored.labels}}
                                                     .dump());
        else
            store_->audit("annotation", json{{"record_id", stored.record_id}}.dump());
        std::size_t initial = 0;
        for (const auto& r : store_->annotations(record.round_t, record.sample_id))
            for (const auto& a : as)
                if (a.annotator_id == r.annotator_id && a.slot <= 2) ++initial;
        out.outcome = initial >= 2 ? resolve(record.round_t, record.sample_id)
                                   : ResolveOutcome{SampleStatus::PartiallyAnnotated, std::nullopt, std::nullopt};
    });
    return out;
}

ResolveOutcome AnnotationService::resolve(int round_t, const std::string& sample_id) {
    ResolveOutcome out;
    store_->transaction([&] {
        const auto as = store_->assignments(round_t, sample_id);
        const auto records = store_->annotations(round_t, sample_id);
        std::map<int, const AnnotationRecord*> by_slot;
        for (const auto& a : as)
            for (const auto& r : records)
                if (r.annotator_id == a.annotator_id) by_slot[a.slot] = &r;
        if (!by_slot.count(1) || !by_slot.count(2))
            throw InsufficientAnnotationsError("sample '" + sample_id + "' has fewer than 2 annotations");

        std::optional<StrategySet> third;
        if (by_slot.count(3)) third = by_slot[3]->labels;
        const auto vote = resolve_votes(by_slot[1]->labels, by_slot[2]->labels, third, taxonomy_);
        if (vote.disagreed) {
            store_->delete_resolution(round_t, sample_id);
            out.status = SampleStatus::Disagreed;
            if (as.size() < 3) {
                std::map<std::string, int> load;
                for (const auto& a : store_->assignments(round_t)) ++load[a.annotator_id];
                std::optional<std::string> pick;
                for (const auto& who : cfg_.roster) {
                    if (std::any_of(as.begin(), as.end(), [&](const Assignment& a) { return a.annotator_id == who; }))
                        continue;
                    if (!pick || load[who] < load[*pick]) pick = who;
                }
                if (!pick) throw RosterTooSmallError("no third annotator available");
                store_->insert_assignment({round_t, sample_id, *pick, 3});
                store_->audit("third_assigned", json{{"round_t", round_t}, {"sample_id", sample_id}, {"annotator_id", *pick}}.dump());
                out.third_annotator = pick;
            }
            return;
        }
        ResolutionRecord rec;
        rec.sample_id = sample_id;
        rec.round_t = round_t;
        rec.final_labels = vote.final_labels;
        rec.method = vote.method;
        for (const auto& [slot, r] : by_slot)
            if (slot <= 2 || third) rec.record_ids.push_back(r->record_id);
        store_->put_resolution(rec);
        out.status = SampleStatus::Resolved;
        out.resolution = rec;
    });
    return out;
}

MaskResult AnnotationService::submit_mask(const MaskRecord& mask) {
    const auto s = store_->sample(mask.sample_id);
    if (!s) throw NotFoundError("unknown sample '" + mask.sample_id + "'");
    std::optional<StrategySet> finals;
    if (auto r = store_->latest_resolution(mask.sample_id)) finals = r->final_labels;
    if (!finals) {
        const auto g = store_->gold();
        if (auto it = g.find(mask.sample_id); it != g.end()) finals = it->second;
    }
    if (!finals) throw StrategyNotInFinalLabelsError("sample '" + mask.sample_id + "' has no resolved labels yet");
    if (!finals->contains(mask.strategy_id))
        throw StrategyNotInFinalLabelsError("strategy '" + mask.strategy_id + "' is not among the final labels of '" +
                                            mask.sample_id + "'");
    const BinaryMask bits = decode_rle(mask.mask);
    if (bits.width != s->width || bits.height != s->height)
        throw DimensionMismatchError("mask is " + std::to_string(bits.width) + "x" + std::to_string(bits.height) +
                                     ", image is " + std::to_string(s->width) + "x" + std::to_string(s->height));

    MaskResult out;
    const auto previous = store_->masks(mask.sample_id, mask.strategy_id);
    out.mask_id = store_->insert_mask(mask);
    for (auto it = previous.rbegin(); it != previous.rend(); ++it) {
        if (it->annotator_id == mask.annotator_id) continue;
        try {
            out.agreement = pixel_dice(decode_rle(it->mask), bits);
        } catch (const DegenerateError&) {
        }
        break;
    }
    return out;
}

RoundStatus AnnotationService::round_status(int round_t) const {
    const auto row = store_->round(round_t);
    if (!row) throw UnknownRoundError("round " + std::to_string(round_t) + " does not exist");
    RoundStatus st;
    st.round_t = round_t;
    st.open = row->open;
    std::set<std::string> ids;
    for (const auto& a : store_->assignments(round_t)) ids.insert(a.sample_id);
    st.total = ids.size();
    for (const auto& id : ids) {
        switch (sample_status(round_t, id)) {
            case SampleStatus::Pending: ++st.pending; break;
            case SampleStatus::PartiallyAnnotated: ++st.partially_annotated; break;
            case SampleStatus::Disagreed: ++st.disagreed; break;
            case SampleStatus::Resolved: ++st.resolved; break;
        }
    }
    st.closable = row->open && st.total > 0 && st.resolved == st.total;
    return st;
}

TrainingExample AnnotationService::make_example(const AdSample& sample, const StrategySet& labels,
                                                const Vocabulary& vocab) const {
    TrainingExample ex;
    ex.sample_id = sample.sample_id;
    ex.raw = features(sample);
    ex.y = encode_labels(labels, taxonomy_);
    if (sample.gold_action_reason) ex.tokens = vocab.encode(*sample.gold_action_reason, cfg_.model.max_target_len);
    return ex;
}

std::unique_ptr<FusionModel> AnnotationService::fresh_model() const {
    std::vector<std::string> sentences;
    for (const auto& s : store_->samples())
        if (s.sample.gold_action_reason) sentences.push_back(*s.sample.gold_action_reason);
    std::vector<std::string> ids;
    for (const auto& s : taxonomy_.strategies()) ids.push_back(s.id);
    return std::make_unique<FusionModel>(cfg_.model, ids, taxonomy_.hash(), Vocabulary::build(sentences),
                                         cfg_.al.train.seed);
}

std::map<std::string, StrategySet> AnnotationService::all_labels() const {
    std::map<std::string, StrategySet> out;
    for (const auto& s : store_->samples())
        if (s.sample.gold_labels && s.sample.split == "train") out[s.sample.sample_id] = *s.sample.gold_labels;
    for (auto& [id, labels] : store_->gold()) out[id] = labels;
    return out;
}

EvalReport AnnotationService::evaluate_model(const FusionModel& model, const std::vector<TrainingExample>& fallback) const {
    std::vector<TrainingExample> val;
    for (const auto& s : store_->samples())
        if (s.sample.split == "val" && s.sample.gold_labels)
            val.push_back(make_example(s.sample, *s.sample.gold_labels, model.vocab()));
    const auto& set = val.empty() ? fallback : val;
    const auto preds = predict_all(model, set);
    std::vector<StrategySet> truths;
    for (const auto& ex : set) truths.push_back(labels_from_multi_hot(ex.y, model.class_ids()));
    return persuade::evaluate(preds, truths);
}

void AnnotationService::publish(std::shared_ptr<const FusionModel> model, const std::string& hash) {
    std::lock_guard lock(state_mu_);
    published_ = std::move(model);
    published_hash_ = hash;
}

CloseResult AnnotationService::close_round_and_train(int round_t) {
    std::lock_guard round_lock(round_mu_);
    const auto row = store_->round(round_t);
    if (!row) throw UnknownRoundError("round " + std::to_string(round_t) + " does not exist");
    CloseResult out;
    out.round_t = round_t;
    if (!row->open) {
        out.already_closed = true;
        out.checkpoint_hash = row->checkpoint_hash;
        out.n_labeled = state().labeled_ids.size();
        if (auto m = latest_metrics()) out.metrics = *m;
        return out;
    }
    const auto status = round_status(round_t);
    if (!status.closable)
        throw RoundNotClosableError("round " + std::to_string(round_t) + ": " + std::to_string(status.resolved) + " of " +
                                    std::to_string(status.total) + " samples resolved");

    const auto resolutions = store_->resolutions(round_t);
    ALState next = state();
    std::shared_ptr<const FusionModel> previous = published_model();

    auto labels = store_->gold();
    RoundRecord rec;
    rec.round_t = round_t;
    for (const auto& r : resolutions) {
        labels[r.sample_id] = r.final_labels;
        rec.selected.push_back(r.sample_id);
    }
    if (auto e = store_->get_kv("round_entropy_" + std::to_string(round_t))) {
        const auto j = json::parse(*e);
        rec.entropy = {j.at("mean").get<double>(), j.at("min").get<double>(), j.at("max").get<double>()};
    }

    std::unique_ptr<FusionModel> model = (cfg_.al.retrain == RetrainMode::WarmStart && previous)
                                             ? std::make_unique<FusionModel>(*previous)
                                             : fresh_model();
    std::vector<TrainingExample> examples;
    for (const auto& [id, set] : labels) {
        const auto s = store_->sample(id);
        if (!s) throw NotFoundError("labeled sample '" + id + "' missing from the store");
        examples.push_back(make_example(s->sample, set, model->vocab()));
    }
    // Errors below propagate with nothing persisted, so the round stays closable.
    train(*model, examples, cfg_.al.train);
    rec.metrics = evaluate_model(*model, examples);
    rec.n_labeled = examples.size();

    const auto path = cfg_.data_dir / "checkpoints" / ("round-" + std::to_string(round_t) + ".ckpt");
    rec.checkpoint_hash = save_checkpoint(path, *model, cfg_.al.train);
    apply_round(next, rec);

    store_->transaction([&] {
        for (const auto& r : resolutions) store_->put_gold(r.sample_id, r.final_labels, round_t);
        store_->close_round(round_t, rec.checkpoint_hash);
        persist_state(next);
        store_->put_kv("checkpoint_path", path.string());
        store_->put_kv("latest_metrics", json(rec.metrics).dump());
    });
    ledger_.append({{"type", "round"}, {"record", round_to_json(rec)}});
    {
        std::lock_guard lock(state_mu_);
        state_ = next;
    }
    publish(std::shared_ptr<const FusionModel>(std::move(model)), rec.checkpoint_hash);

    out.checkpoint_hash = rec.checkpoint_hash;
    out.n_labeled = next.labeled_ids.size();
    out.metrics = rec.metrics;
    return out;
}

TrainSummary AnnotationService::train_all() {
    std::lock_guard round_lock(round_mu_);
    const auto labels = all_labels();
    if (labels.empty()) throw EmptyCorpusError("train: no labelled samples available");
    auto model = fresh_model();
    std::vector<TrainingExample> examples;
    for (const auto& [id, set] : labels) examples.push_back(make_example(store_->sample(id)->sample, set, model->vocab()));
    TrainSummary out;
    out.result = train(*model, examples, cfg_.al.train);
    out.metrics = evaluate_model(*model, examples);
    out.n_examples = examples.size();
    const auto path = cfg_.data_dir / "checkpoints" / "train-all.ckpt";
    out.checkpoint_hash = save_checkpoint(path, *model, cfg_.al.train);
    store_->transaction([&] {
        store_->put_kv("checkpoint_path", path.string());
        store_->put_kv("latest_metrics", json(out.metrics).dump());
    });
    publish(std::shared_ptr<const FusionModel>(std::move(model)), out.checkpoint_hash);
    return out;
}

EvalReport AnnotationService::evaluate(const std::string& split) const {
    const auto model = published_model();
    if (!model) throw NotFoundError("no published checkpoint; train first");
    const auto gold = store_->gold();
    std::vector<TrainingExample> examples;
    for (const auto& s : store_->samples()) {
        if (s.sample.split != split) continue;
        std::optional<StrategySet> labels = s.sample.gold_labels;
        if (auto it = gold.find(s.sample.sample_id); it != gold.end()) labels = it->second;
        if (labels) examples.push_back(make_example(s.sample, *labels, model->vocab()));
    }
    if (examples.empty()) throw EmptyCorpusError("evaluate: no labelled samples in split '" + split + "'");
    const auto preds = predict_all(*model, examples);
    std::vector<StrategySet> truths;
    for (const auto& ex : examples) truths.push_back(labels_from_multi_hot(ex.y, model->class_ids()));
    return persuade::evaluate(preds, truths);
}

std::vector<ScoredSample> AnnotationService::rank_current_pool() const {
    const auto model = published_model();
    if (!model) throw NotFoundError("no published checkpoint to score the pool with");
    const auto st = state();
    const std::vector<std::string> pool(st.pool_ids.begin(), st.pool_ids.end());
    return rank_pool(*model, pool, [&](const std::string& id) {
        const auto s = store_->sample(id);
        if (!s) throw NotFoundError("pool sample '" + id + "' missing from the store");
        return features(s->sample);
    });
}

json AnnotationService::analyze() const {
    std::vector<AdSample> labelled;
    const auto gold = store_->gold();
    for (const auto& s : store_->samples()) {
        AdSample a = s.sample;
        if (auto it = gold.find(a.sample_id); it != gold.end()) a.gold_labels = it->second;
        if (a.gold_labels) labelled.push_back(std::move(a));
    }
    json out;
    const auto cs = corpus_stats(labelled, taxonomy_);
    out["stats"] = stats_to_json(cs.total, taxonomy_);
    out["stats_per_split"] = json::object();
    for (const auto& [split, st] : cs.per_split) out["stats_per_split"][split] = stats_to_json(st, taxonomy_);

    std::vector<StrategySet> sets;
    for (const auto& a : labelled) sets.push_back(*a.gold_labels);
    out["cooccurrence"] = dice_matrix_to_json(strategy_cooccurrence(sets, taxonomy_));
    try {
        out["topic_correlation"] = dice_matrix_to_json(topic_strategy_correlation(labelled, taxonomy_));
    } catch (const MissingTagsError& e) {
        out["topic_correlation"] = nullptr;
        out["topic_correlation_error"] = e.what();
    }

    std::map<std::string, StrategySet> first, second;
    for (const auto& row : store_->rounds()) {
        for (const auto& a : store_->assignments(row.round_t)) {
            if (a.slot > 2) continue;
            for (const auto& r : store_->annotations(row.round_t, a.sample_id)) {
                if (r.annotator_id != a.annotator_id) continue;
                const auto key = std::to_string(row.round_t) + "/" + a.sample_id;
                (a.slot == 1 ? first : second)[key] = r.labels;
            }
        }
    }
    for (auto it = first.begin(); it != first.end();)
        it = second.count(it->first) ? std::next(it) : first.erase(it);
    for (auto it = second.begin(); it != second.end();)
        it = first.count(it->first) ? std::next(it) : second.erase(it);
    try {
        const auto k = cohens_kappa(first, second, taxonomy_);
        out["agreement"] = {{"items", first.size()}, {"kappa", k.kappa}, {"kappa_max", k.kappa_max}, {"adjusted", k.adjusted}};
    } catch (const Error& e) {
        out["agreement"] = {{"items", first.size()}, {"error", e.what()}};
    }

    std::map<std::pair<std::string, std::string>, std::vector<MaskRecord>> groups;
    for (auto& m : store_->all_masks()) groups[{m.sample_id, m.strategy_id}].push_back(std::move(m));
    double sum = 0.0;
    std::size_t pairs = 0;
    for (const auto& [key, ms] : groups) {
        if (ms.size() < 2 || ms[0].annotator_id == ms[1].annotator_id) continue;
        try {
            sum += pixel_dice(decode_rle(ms[0].mask), decode_rle(ms[1].mask));
            ++pairs;
        } catch (const DegenerateError&) {
        }
    }
    out["mask_agreement"] = {{"pairs", pairs}, {"mean_dice", pairs ? json(sum / static_cast<double>(pairs)) : json(nullptr)}};
    return out;
}

std::vector<ScoredSample> select_from_manifest(const std::filesystem::path& checkpoint,
                                               const std::filesystem::path& pool_manifest, std::size_t k,
                                               const std::string& extractors,
                                               const std::filesystem::path& taxonomy_path) {
    const Taxonomy tax = load_taxonomy(taxonomy_path_or_default(taxonomy_path));
    auto ck = load_checkpoint(checkpoint, tax.hash());
    const auto samples = read_manifest(pool_manifest);
    auto suite = make_suite(extractors);
    std::map<std::string, const AdSample*> by_id;
    std::vector<std::string> ids;
    for (const auto& s : samples) {
        by_id[s.sample_id] = &s;
        ids.push_back(s.sample_id);
    }
    const auto& cfg = ck.model->config().extractor;
    const auto ranked = rank_pool(*ck.model, ids, [&](const std::string& id) {
        const AdSample& s = *by_id.at(id);
        return extract_raw({id}, decode_image(s.image_ref), s.ocr_text, cfg, suite);
    });
    std::vector<ScoredSample> out(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(std::min(k, ranked.size())));
    return out;
}

json to_json(const Assignment& a) {
    return {{"round_t", a.round_t}, {"sample_id", a.sample_id}, {"annotator_id", a.annotator_id}, {"slot", a.slot}};
}

json to_json(const AnnotationRecord& r) {
    return {{"record_id", r.record_id},   {"sample_id", r.sample_id},       {"annotator_id", r.annotator_id},
            {"labels", r.labels.ids()},   {"submitted_at", r.submitted_at}, {"round_t", r.round_t}};
}

json to_json(const ResolutionRecord& r) {
    return {{"sample_id", r.sample_id},
            {"round_t", r.round_t},
            {"final_labels", r.final_labels.ids()},
            {"method", resolution_method_name(r.method)},
            {"record_ids", r.record_ids}};
}

json to_json(const SubmitResult& r) {
    json j{{"accepted", true},
           {"record", to_json(r.record)},
           {"replaced", r.replaced},
           {"status", sample_status_name(r.outcome.status)}};
    j["resolution"] = r.outcome.resolution ? to_json(*r.outcome.resolution) : json(nullptr);
    j["third_annotator"] = r.outcome.third_annotator ? json(*r.outcome.third_annotator) : json(nullptr);
    return j;
}

json to_json(const MaskResult& r) {
    return {{"accepted", true}, {"mask_id", r.mask_id}, {"agreement_dice", r.agreement ? json(*r.agreement) : json(nullptr)}};
}

json to_json(const RoundStatus& s) {
    return {{"round_t", s.round_t},
            {"open", s.open},
            {"total", s.total},
            {"pending", s.pending},
            {"partially_annotated", s.partially_annotated},
            {"disagreed", s.disagreed},
            {"resolved", s.resolved},
            {"closable", s.closable}};
}

json to_json(const RoundOpened& r) {
    json as = json::array();
    for (const auto& a : r.assignments) as.push_back(to_json(a));
    return {{"round_t", r.round_t}, {"sample_ids", r.sample_ids}, {"assignments", as}};
}

json to_json(const CloseResult& r) {
    return {{"round_t", r.round_t},
            {"checkpoint_hash", r.checkpoint_hash},
            {"n_labeled", r.n_labeled},
            {"already_closed", r.already_closed},
            {"metrics", r.metrics}};
}

json to_json(const PendingAssignment& p) {
    return {{"sample_id", p.sample_id}, {"image_url", p.image_url}, {"ocr_preview", p.ocr_preview},
            {"width", p.width},         {"height", p.height},       {"slot", p.slot}};
}

json to_json(const ScoredSample& s) {
    return {{"sample_id", s.sample_id}, {"entropy", s.entropy}};
}

AnnotationRecord annotation_from_json(const json& j) {
    try {
        AnnotationRecord r;
        j.at("sample_id").get_to(r.sample_id);
        j.at("annotator_id").get_to(r.annotator_id);
        j.at("round_t").get_to(r.round_t);
        r.labels = j.at("labels").get<StrategySet>();
        return r;
    } catch (const json::exception& e) {
        throw ParseError(std::string("annotation: ") + e.what());
    }
}

MaskRecord mask_from_json(const json& j) {
    try {
        MaskRecord m;
        j.at("sample_id").get_to(m.sample_id);
        j.at("strategy_id").get_to(m.strategy_id);
        j.at("annotator_id").get_to(m.annotator_id);
        const auto& mk = j.at("mask");
        mk.at("width").get_to(m.mask.width);
        mk.at("height").get_to(m.mask.height);
        mk.at("counts").get_to(m.mask.counts);
        return m;
    } catch (const json::exception& e) {
        throw ParseError(std::string("mask: ") + e.what());
    }
}

}  // namespace persuade
