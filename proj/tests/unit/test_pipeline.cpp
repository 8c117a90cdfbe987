// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vendi-rag Authors

#include <catch_amalgamated.hpp>

#include "oracles.hpp"
#include "vendi/pipeline.hpp"

using namespace vendi;

namespace {

struct Fixture {
    HashEmbedder embedder{64};
    VectorIndex index;

    Fixture() {
        const char* texts[] = {
            "the amber river runs through veloria",     "veloria is a city of bridges",
            "bridges in veloria were built by guilds",  "the guild of masons met each spring",
            "spring floods raised the amber river",     "river trade brought salt and glass",
            "glass makers lived along the east bank",   "the east bank held the old market",
            "markets opened at dawn in veloria",        "dawn bells rang from the tower",
            "the tower was rebuilt after a fire",       "fire destroyed the north quarter"};
        std::vector<Chunk> chunks;
        for (std::size_t i = 0; i < std::size(texts); ++i) {
            Chunk c = oracle::make_chunk(oracle::doc_id(i));
            c.title = "T" + std::to_string(i);
            c.text = texts[i];
            chunks.push_back(c);
        }
        REQUIRE(ingest(index, chunks, embedder).complete());
    }
};

PipelineConfig small_config() {
    PipelineConfig c;
    c.retrieval.pool_size = 6;
    c.retrieval.select_k = 3;
    return c;
}

std::string judge(double c, double r, double q) {
    return nlohmann::json{{"C", c}, {"R", r}, {"Q", q}}.dump();
}

/// Reasoning and answers by ordinal, judge scores from `scores`, rewrites by ordinal.
Scenario scripted(const std::vector<std::array<double, 3>>& scores) {
    Scenario sc;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        sc.rules.push_back({PromptRole::reasoning, i, {}, {}, "reasoning " + std::to_string(i + 1)});
        sc.rules.push_back({PromptRole::answer, i, {}, {}, " answer " + std::to_string(i + 1) + " "});
        sc.rules.push_back({PromptRole::judge, i, {}, {}, judge(scores[i][0], scores[i][1], scores[i][2])});
        sc.rules.push_back({PromptRole::rewrite, i, {}, {}, "refined query " + std::to_string(i + 1)});
    }
    return sc;
}

std::vector<PromptRole> roles(const ScriptedProvider& p) {
    std::vector<PromptRole> out;
    for (const auto& r : p.history()) out.push_back(r.role);
    return out;
}

using R = PromptRole;

}  // namespace

TEST_CASE("s update") {
    CHECK(update_s(10.0) == 0.0);
    CHECK(update_s(1.0) == Catch::Approx(0.9));
    CHECK(update_s(5.0) == Catch::Approx(0.5));
    CHECK_THROWS_AS(update_s(0.5), RangeError);
    CHECK_THROWS_AS(update_s(10.5), RangeError);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(1.0, 10.0);
    double prev_q = 1.0, prev_s = update_s(1.0);
    for (int i = 0; i < 1000; ++i) {
        const double q = u(rng);
        const double s = update_s(q);
        CHECK(s >= 0.0);
        CHECK(s <= 0.9 + 1e-15);
        CHECK(s == Catch::Approx(1.0 - q / 10.0).margin(1e-15));
        if (q > prev_q) CHECK(s <= prev_s);  // higher quality, less diversity
        prev_q = q;
        prev_s = s;
    }
}

TEST_CASE("threshold reached on the first iteration") {
    Fixture f;
    ScriptedProvider llm(scripted({{9, 9, 9}}));
    const auto r = run_pipeline("Which river flows through veloria?", f.index, f.embedder, llm, small_config());
    REQUIRE(r.trace.size() == 1);
    CHECK(r.terminated_by == Termination::threshold);
    CHECK(r.best_iteration == 1);
    CHECK(r.final_answer == "answer 1");
    CHECK(r.trace[0].s == 0.8);
    CHECK(r.trace[0].q_norm == Catch::Approx(0.9));
    CHECK(r.trace[0].selection.selected.size() == 3);
    CHECK_FALSE(r.trace[0].next_query);
    CHECK(roles(llm) == std::vector<R>{R::reasoning, R::answer, R::judge});
}

TEST_CASE("quality exactly at tau terminates") {
    Fixture f;
    ScriptedProvider llm(scripted({{8, 8, 9.5}, {9, 9, 9}}));
    const auto r = run_pipeline("q", f.index, f.embedder, llm, small_config());
    REQUIRE(r.trace.size() == 1);
    CHECK(r.trace[0].q_norm == 0.85);
    CHECK(r.terminated_by == Termination::threshold);
}

TEST_CASE("budget exhaustion follows the iteration protocol") {
    Fixture f;
    ScriptedProvider llm(scripted({{6, 6, 6}, {8, 8, 8}, {7, 7, 7}}));
    const std::string question = "Who built the bridges of veloria?";
    const auto r = run_pipeline(question, f.index, f.embedder, llm, small_config());

    REQUIRE(r.trace.size() == 3);
    CHECK(r.terminated_by == Termination::budget);
    CHECK(roles(llm) == std::vector<R>{R::reasoning, R::answer, R::judge, R::rewrite, R::reasoning, R::answer,
                                       R::judge, R::rewrite, R::reasoning, R::answer, R::judge});

    // s_{t+1} = 1 - Q_t / 10
    CHECK(r.trace[0].s == 0.8);
    CHECK(r.trace[1].s == Catch::Approx(0.4));
    CHECK(r.trace[2].s == Catch::Approx(0.2));
    for (const auto& st : r.trace) CHECK(st.selection.s == st.s);

    // Retrieval uses the rewritten query; generation and judging use the question.
    CHECK(r.trace[0].query == question);
    CHECK(r.trace[1].query == "refined query 1");
    CHECK(r.trace[2].query == "refined query 2");
    CHECK(*r.trace[0].next_query == "refined query 1");
    CHECK_FALSE(r.trace[2].next_query);
    CHECK_FALSE(r.trace[2].rewrite_response);
    for (const auto& req : llm.history()) {
        if (req.role != R::rewrite) CHECK(req.text().find(question) != std::string::npos);
        CHECK((req.text().find("refined query") == std::string::npos || req.role == R::rewrite));
    }

    // The rewrite sees the answer and reasoning of its iteration.
    const auto hist = llm.history();
    CHECK(hist[3].text().find("answer 1") != std::string::npos);
    CHECK(hist[3].text().find("reasoning 1") != std::string::npos);
    CHECK(hist[7].text().find("refined query 1") != std::string::npos);

    // The answer prompt accumulates reasoning across iterations.
    const auto& last_answer = hist[9].text();
    const auto p1 = last_answer.find("Step 1:\nreasoning 1");
    const auto p2 = last_answer.find("Step 2:\nreasoning 2");
    const auto p3 = last_answer.find("Step 3:\nreasoning 3");
    REQUIRE(p3 != std::string::npos);
    CHECK(p1 < p2);
    CHECK(p2 < p3);

    SECTION("best-judged answer is returned by default") {
        CHECK(r.best_iteration == 2);
        CHECK(r.final_answer == "answer 2");
    }
    SECTION("strict mode returns the last answer") {
        auto c = small_config();
        c.strict_alg1 = true;
        llm.reset();
        const auto s = run_pipeline(question, f.index, f.embedder, llm, c);
        CHECK(s.best_iteration == 3);
        CHECK(s.final_answer == "answer 3");
    }
}

TEST_CASE("ties in quality keep the earliest iteration") {
    Fixture f;
    ScriptedProvider llm(scripted({{5, 5, 5}, {5, 5, 5}, {5, 5, 5}}));
    const auto r = run_pipeline("q", f.index, f.embedder, llm, small_config());
    CHECK(r.best_iteration == 1);
    CHECK(r.trace[1].s == Catch::Approx(0.5));
    CHECK(r.trace[2].s == Catch::Approx(0.5));
}

TEST_CASE("fixed schedule keeps s1") {
    Fixture f;
    auto c = small_config();
    c.schedule = SSchedule::fixed;
    c.s1 = 0.3;
    ScriptedProvider llm(scripted({{2, 2, 2}, {9, 1, 3}, {4, 4, 4}}));
    const auto r = run_pipeline("q", f.index, f.embedder, llm, c);
    REQUIRE(r.trace.size() == 3);
    for (const auto& st : r.trace) CHECK(st.s == 0.3);
}

TEST_CASE("judge disabled runs one iteration") {
    Fixture f;
    auto c = small_config();
    c.judge_enabled = false;
    ScriptedProvider llm(scripted({{1, 1, 1}}));
    const auto r = run_pipeline("q", f.index, f.embedder, llm, c);
    REQUIRE(r.trace.size() == 1);
    CHECK(r.terminated_by == Termination::budget);
    CHECK_FALSE(r.trace[0].verdict);
    CHECK(r.trace[0].q_norm == 0.0);
    CHECK(r.final_answer == "answer 1");
    CHECK(roles(llm) == std::vector<R>{R::reasoning, R::answer});
    CHECK(trace_to_json(r)[0]["verdict"].is_null());
}

TEST_CASE("exclude seen gives disjoint selections") {
    Fixture f;
    auto c = small_config();
    c.exclude_seen = true;
    ScriptedProvider llm(scripted({{3, 3, 3}, {3, 3, 3}, {3, 3, 3}}));
    const auto r = run_pipeline("veloria river", f.index, f.embedder, llm, c);
    REQUIRE(r.trace.size() == 3);
    std::set<std::string> all;
    std::size_t total = 0;
    for (const auto& st : r.trace) {
        for (const auto& id : st.selection.ids()) all.insert(id);
        total += st.selection.ids().size();
    }
    CHECK(all.size() == total);
    CHECK(total == 9);

    SECTION("without exclusion a stable query reselects") {
        Scenario sc = scripted({{3, 3, 3}, {3, 3, 3}, {3, 3, 3}});
        for (auto& rule : sc.rules)
            if (rule.role == R::rewrite) rule.response = "veloria river";
        ScriptedProvider again(sc);
        auto plain = small_config();
        plain.schedule = SSchedule::fixed;
        const auto q = run_pipeline("veloria river", f.index, f.embedder, again, plain);
        CHECK(q.trace[0].selection.ids() == q.trace[1].selection.ids());
    }
}

TEST_CASE("failures carry the partial trace") {
    Fixture f;
    SECTION("judge parse failure on the second iteration") {
        Scenario sc = scripted({{4, 4, 4}, {4, 4, 4}});
        sc.rules[6].response = "looks fine to me";
        ScriptedProvider llm(sc);
        try {
            run_pipeline("q", f.index, f.embedder, llm, small_config());
            FAIL("expected PipelineError");
        } catch (const PipelineError& e) {
            REQUIRE(e.partial().trace.size() == 1);
            CHECK(e.partial().final_answer == "answer 1");
            CHECK(std::string(e.what()).find("iteration 2") != std::string::npos);
            CHECK_THROWS_AS(e.rethrow_cause(), JudgeParseError);
        }
    }
    SECTION("provider failure on the first iteration") {
        ScriptedProvider llm(Scenario{});
        try {
            run_pipeline("q", f.index, f.embedder, llm, small_config());
            FAIL("expected PipelineError");
        } catch (const PipelineError& e) {
            CHECK(e.partial().trace.empty());
            CHECK_THROWS_AS(e.rethrow_cause(), ProviderError);
        }
    }
    SECTION("out-of-range judge score") {
        ScriptedProvider llm(scripted({{4, 4, 12}}));
        try {
            run_pipeline("q", f.index, f.embedder, llm, small_config());
            FAIL("expected PipelineError");
        } catch (const PipelineError& e) {
            CHECK_THROWS_AS(e.rethrow_cause(), JudgeRangeError);
        }
    }
}

TEST_CASE("pipeline input validation") {
    Fixture f;
    ScriptedProvider llm(scripted({{9, 9, 9}}));
    auto bad = [&](auto mutate) {
        auto c = small_config();
        mutate(c);
        return c;
    };
    CHECK_THROWS_AS(run_pipeline("q", f.index, f.embedder, llm, bad([](auto& c) { c.s1 = 1.5; })), ConfigError);
    CHECK_THROWS_AS(run_pipeline("q", f.index, f.embedder, llm, bad([](auto& c) { c.tau = 0.0; })), ConfigError);
    CHECK_THROWS_AS(run_pipeline("q", f.index, f.embedder, llm, bad([](auto& c) { c.tau = 1.2; })), ConfigError);
    CHECK_THROWS_AS(run_pipeline("q", f.index, f.embedder, llm, bad([](auto& c) { c.max_iterations = 0; })),
                    ConfigError);
    CHECK_THROWS_AS(run_pipeline("q", f.index, f.embedder, llm,
                                 bad([](auto& c) { c.retrieval.select_k = 7; })),
                    ConfigError);
    CHECK_THROWS_AS(run_pipeline("  ", f.index, f.embedder, llm, small_config()), InsufficientInputError);
    VectorIndex empty;
    CHECK_THROWS_AS(run_pipeline("q", empty, f.embedder, llm, small_config()), EmptyIndexError);
    CHECK(llm.history().empty());
    CHECK_THROWS_AS(parse_schedule("sometimes"), ConfigError);
}

TEST_CASE("traces are reproducible and replayable") {
    Fixture f;
    const auto sc = scripted({{6, 6, 6}, {8, 8, 8}, {7, 7, 7}});
    auto run = [&](const Scenario& s, bool verbose) {
        ScriptedProvider llm(s);
        return trace_to_json(run_pipeline("bridges", f.index, f.embedder, llm, small_config()), verbose).dump();
    };
    const auto a = run(sc, true);
    CHECK(a == run(sc, true));

    ScriptedProvider llm(sc);
    const auto first = run_pipeline("bridges", f.index, f.embedder, llm, small_config());
    const auto replay = scenario_from_trace(first);
    CHECK(run(replay, true) == a);
    CHECK(run(Scenario::from_json(replay.to_json()), false) == trace_to_json(first).dump());

    const auto j = nlohmann::json::parse(a);
    REQUIRE(j.is_array());
    REQUIRE(j.size() == 3);
    for (const char* key : {"iteration", "query", "s", "selection", "reasoning", "answer", "q_norm", "verdict",
                            "rewrite_response", "next_query", "prompts"}) {
        CHECK(j[0].contains(key));
    }
    CHECK(j[0]["verdict"]["Q_t"] == 6.0);
    CHECK(j[0]["selection"]["chunk_ids"].size() == 3);
    CHECK(j[2]["prompts"]["rewrite"] == "");
}
