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

#include "doctest.h"
#include "persuade/error.hpp"
#include "persuade/store.hpp"
#include "synthetic.hpp"

using namespace persuade;

TEST_CASE("store: samples, rounds, assignments") {
    const auto dir = testkit::temp_dir("store");
    {
        Store db(dir / "p.db");
        StoredSample s;
        s.sample.sample_id = "a";
        s.sample.image_ref = "/x/a.png";
        s.sample.gold_labels = StrategySet{"c0"};
        s.width = 10;
        s.height = 5;
        CHECK(db.insert_sample(s));
        CHECK_FALSE(db.insert_sample(s));
        const auto back = db.sample("a");
        REQUIRE(back.has_value());
        CHECK(back->width == 10);
        CHECK(back->sample.gold_labels == s.sample.gold_labels);
        CHECK_FALSE(db.sample("zz").has_value());

        db.insert_round(0);
        CHECK(db.round(0)->open);
        CHECK_THROWS_AS(db.insert_round(0), ConflictError);
        db.insert_assignment({0, "a", "ann1", 1});
        db.insert_assignment({0, "a", "ann2", 2});
        CHECK_THROWS_AS(db.insert_assignment({0, "a", "ann1", 3}), ConflictError);
        CHECK(db.assignments(0, "a").size() == 2);
        db.close_round(0, "abc");
        CHECK_FALSE(db.round(0)->open);
        CHECK(db.round(0)->checkpoint_hash == "abc");
        db.put_kv("k", "v1");
        db.put_kv("k", "v2");
    }
    // persisted across reopen
    Store db(dir / "p.db");
    CHECK(db.samples().size() == 1);
    CHECK(db.rounds().size() == 1);
    CHECK(db.get_kv("k") == "v2");
    CHECK_FALSE(db.get_kv("missing").has_value());
    std::filesystem::remove_all(dir);
}

TEST_CASE("store: annotation upsert keeps one row per annotator") {
    const auto dir = testkit::temp_dir("store-ann");
    Store db(dir / "p.db");
    AnnotationRecord r;
    r.sample_id = "a";
    r.annotator_id = "ann1";
    r.labels = StrategySet{"c0"};
    r.submitted_at = utc_now();
    const auto [first, replaced1] = db.upsert_annotation(r);
    CHECK_FALSE(replaced1);
    r.labels = StrategySet{"c1", "c2"};
    const auto [second, replaced2] = db.upsert_annotation(r);
    CHECK(replaced2);
    const auto all = db.annotations(0, "a");
    REQUIRE(all.size() == 1);
    CHECK(all[0].labels == StrategySet{"c1", "c2"});
    CHECK(all[0].record_id == second.record_id);

    ResolutionRecord res{"a", 0, StrategySet{"c1"}, ResolutionMethod::Agreement, {second.record_id}};
    db.put_resolution(res);
    CHECK(db.resolution(0, "a") == res);
    CHECK(db.latest_resolution("a") == res);
    db.delete_resolution(0, "a");
    CHECK_FALSE(db.resolution(0, "a").has_value());
    CHECK(std::string(resolution_method_name(ResolutionMethod::ThirdAnnotatorMajority)) ==
          "third-annotator-majority");
    std::filesystem::remove_all(dir);
}

TEST_CASE("store: transactions roll back and nest") {
    const auto dir = testkit::temp_dir("store-tx");
    Store db(dir / "p.db");
    CHECK_THROWS_AS(db.transaction([&] {
        db.put_kv("a", "1");
        db.transaction([&] { db.put_kv("b", "2"); });
        throw ValidationError("abort");
    }),
                    ValidationError);
    CHECK_FALSE(db.get_kv("a").has_value());
    CHECK_FALSE(db.get_kv("b").has_value());

    db.transaction([&] {
        db.put_kv("a", "1");
        db.transaction([&] { db.put_kv("b", "2"); });
    });
    CHECK(db.get_kv("b") == "2");
    std::filesystem::remove_all(dir);
}

TEST_CASE("store: masks, gold, audit") {
    const auto dir = testkit::temp_dir("store-misc");
    Store db(dir / "p.db");
    MaskRecord m;
    m.sample_id = "a";
    m.strategy_id = "c0";
    m.annotator_id = "ann1";
    m.mask = RleMask{2, 2, {0, 2, 2}};
    m.submitted_at = utc_now();
    m.mask_id = db.insert_mask(m);
    const auto back = db.masks("a", "c0");
    REQUIRE(back.size() == 1);
    CHECK(back[0] == m);
    CHECK(db.masks("a", "c1").empty());

    db.put_gold("a", StrategySet{"c0"}, 1);
    db.put_gold("a", StrategySet{"c2"}, 2);
    CHECK(db.gold().at("a") == StrategySet{"c2"});

    db.audit("test", "{}");
    CHECK(db.audit_log().size() == 1);
    CHECK(utc_now().back() == 'Z');
    std::filesystem::remove_all(dir);
}
