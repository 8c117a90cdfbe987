// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vendi-rag Authors

// Acceptance gate: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include "metric_cases.hpp"
#include "oracles.hpp"
#include "vendi/cli.hpp"
#include "vendi/eigen.hpp"
#include "vendi/evaluation.hpp"
#include "vendi/kernel.hpp"
#include "vendi/pipeline.hpp"
#include "vendi/vendi_score.hpp"

using namespace vendi;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double vs_exact_tol = 1e-9;
constexpr double eigen_tol = 1e-8;
constexpr double duplication_tol = 1e-6;
constexpr double greedy_ratio = 0.95;
constexpr double greedy_pass_rate = 0.95;
constexpr double monotone_slack = 1e-12;
constexpr double metric_tol = 1e-12;
constexpr double rank_tol = 1e-12;

struct Outcome {
    bool pass = true;
    std::string detail;
};

struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::vector<EmbeddingVector> embeddings(const std::vector<std::vector<double>>& vs) {
    std::vector<EmbeddingVector> out;
    for (const auto& v : vs) out.emplace_back(v);
    return out;
}

RetrievalConfig retrieval(RetrievalStrategy st, double s, std::size_t k, std::size_t pool) {
    RetrievalConfig c;
    c.strategy = st;
    c.s = s;
    c.select_k = k;
    c.pool_size = pool;
    return c;
}

// --- 1 -------------------------------------------------------------------------

Outcome vs_exactness() {
    double worst = 0.0;
    for (std::size_t n = 2; n <= 12; ++n) {
        worst = std::max(worst, std::abs(vendi_score(KernelMatrix(SymmetricMatrix::constant(n, 1.0))) - 1.0));
        worst = std::max(worst, std::abs(vendi_score(KernelMatrix(SymmetricMatrix::identity(n))) - double(n)));
    }
    return {worst <= vs_exact_tol, fmt("max error %.2e over n=2..12", worst)};
}

// --- 2 -------------------------------------------------------------------------

Outcome eigensolver_oracle() {
    std::mt19937_64 rng(2002);
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 1 + static_cast<std::size_t>(t % 12);
        const std::size_t rank = 1 + static_cast<std::size_t>(rng() % n);
        const auto a = oracle::random_psd(n, rank, rng);
        const auto mine = symmetric_eigenvalues(SymmetricMatrix(n, a)).eigenvalues;
        const auto ref = oracle::bisection_eigenvalues(a, n);
        if (mine.size() != n) return {false, "wrong eigenvalue count"};
        for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(mine[i] - std::max(ref[i], 0.0)));
    }
    return {worst <= eigen_tol, fmt("200 matrices, max |diff| %.2e", worst)};
}

// --- 3 -------------------------------------------------------------------------

Outcome duplication_invariance() {
    std::mt19937_64 rng(3003);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 1 + static_cast<std::size_t>(t % 10);
        const std::size_t dim = 2 + static_cast<std::size_t>(rng() % 15);
        std::vector<std::vector<double>> vs;
        for (std::size_t i = 0; i < n; ++i) vs.push_back(oracle::random_vector(dim, rng));
        const auto d = embeddings(vs);
        auto dd = d;
        dd.insert(dd.end(), d.begin(), d.end());
        worst = std::max(worst, std::abs(vendi_score(d) - vendi_score(dd)));
    }
    return {worst <= duplication_tol, fmt("100 sets, max |VS(D) - VS(D+D)| %.2e", worst)};
}

// --- 4 -------------------------------------------------------------------------

/// Top-k ids by brute-force similarity over the stored vectors.
std::vector<std::string> brute_top_k(const VectorIndex& index, const std::vector<double>& q, std::size_t k) {
    std::vector<std::pair<double, std::string>> scored;
    for (const auto& e : index.entries()) {
        double d = 0.0, nv = 0.0, nq = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) {
            d += double(e.vector[i]) * q[i];
            nv += double(e.vector[i]) * double(e.vector[i]);
            nq += q[i] * q[i];
        }
        scored.emplace_back(d / std::sqrt(nv * nq), e.chunk.chunk_id);
    }
    std::sort(scored.begin(), scored.end(),
              [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < k && i < scored.size(); ++i) out.push_back(scored[i].second);
    return out;
}

Outcome endpoint_equivalence() {
    std::mt19937_64 rng(4004);
    int ok = 0;
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 20 + static_cast<std::size_t>(rng() % 61);
        const std::size_t dim = 8 + static_cast<std::size_t>(rng() % 25);
        std::vector<std::vector<double>> vs;
        for (std::size_t i = 0; i < n; ++i) vs.push_back(oracle::random_vector(dim, rng));
        const auto index = oracle::make_index(vs);
        const auto q = oracle::random_vector(dim, rng);
        const std::size_t k = 1 + static_cast<std::size_t>(rng() % 10);
        const std::size_t pool = std::max<std::size_t>(k, 10 + static_cast<std::size_t>(rng() % (n - 9)));
        const auto sel = select_vendi(index, EmbeddingVector(q), retrieval(RetrievalStrategy::vendi, 0.0, k, pool));
        ok += sel.ids() == brute_top_k(index, q, k);
    }
    return {ok == 50, fmt("%d/50 corpora identical to top-k", ok)};
}

// --- 5 -------------------------------------------------------------------------

Outcome greedy_vs_exhaustive() {
    std::mt19937_64 rng(5005);
    const int trials = 200;
    int good = 0;
    double worst = 1.0;
    for (int t = 0; t < trials; ++t) {
        const std::size_t m = 4 + static_cast<std::size_t>(t % 5);
        const std::size_t k = 2 + static_cast<std::size_t>(t % 3);
        const double s = (t % 6) / 5.0;
        std::vector<std::vector<double>> vs;
        for (std::size_t i = 0; i < m; ++i) vs.push_back(oracle::random_vector(16, rng));
        const auto index = oracle::make_index(vs);
        const auto pool = oracle::pool_for(index, oracle::random_vector(16, rng), m);
        const double greedy = greedy_vendi_selection(pool, k, s).vrs;
        const double best = oracle::exhaustive_best_vrs(pool, k, s);
        const double ratio = best > 0.0 ? greedy / best : 1.0;
        worst = std::min(worst, ratio);
        good += greedy >= greedy_ratio * best - 1e-12;
    }
    const double rate = double(good) / trials;
    return {rate >= greedy_pass_rate, fmt("%d/%d trials within %.2f of optimum (worst ratio %.3f)", good, trials,
                                          greedy_ratio, worst)};
}

// --- 6 -------------------------------------------------------------------------

Outcome sensitivity_shape() {
    std::mt19937_64 rng(6006);
    const std::size_t dim = 32, clusters = 10, per_cluster = 20;
    std::vector<std::vector<double>> centers, vs;
    for (std::size_t c = 0; c < clusters; ++c) centers.push_back(oracle::random_vector(dim, rng));
    for (std::size_t c = 0; c < clusters; ++c)
        for (std::size_t i = 0; i < per_cluster; ++i) vs.push_back(oracle::jitter(centers[c], 0.1, rng));
    const auto index = oracle::make_index(vs);
    std::vector<EmbeddingVector> queries;
    for (std::size_t q = 0; q < 100; ++q) queries.emplace_back(oracle::jitter(centers[q % clusters], 0.3, rng));
    const std::vector<double> s_values = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
    SensitivityConfig cfg;
    cfg.jobs = 4;
    const auto rows = sensitivity_analysis(index, queries, s_values, cfg);

    bool pass = rows.size() == s_values.size() && rows[0].tau == 1.0 && rows[0].rho == 1.0;
    std::string table;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        table += fmt(" s=%.1f:%.3f/%.3f", rows[i].s, rows[i].tau, rows[i].rho);
        if (i > 0) {
            pass = pass && rows[i].tau <= rows[i - 1].tau + monotone_slack;
            pass = pass && rows[i].rho <= rows[i - 1].rho + monotone_slack;
        }
    }
    return {pass, "tau/rho" + table};
}

// --- 7 -------------------------------------------------------------------------

Outcome diversity_dominance() {
    std::mt19937_64 rng(7007);
    int ok = 0;
    double min_gap = 1e300;
    for (int t = 0; t < 50; ++t) {
        const std::size_t dim = 16;
        const auto q = oracle::random_vector(dim, rng);
        std::vector<std::vector<double>> vs;
        // Two planted clusters of near-duplicates closest to the query.
        for (int c = 0; c < 2; ++c) {
            const auto center = oracle::jitter(q, 0.08, rng);
            for (int i = 0; i < 6; ++i) vs.push_back(oracle::jitter(center, 0.01, rng));
        }
        for (int i = 0; i < 12; ++i) {
            const auto side = oracle::random_vector(dim, rng);
            std::vector<double> v(dim);
            for (std::size_t d = 0; d < dim; ++d) v[d] = 0.6 * q[d] + 0.8 * side[d];
            vs.push_back(oracle::normalize(v));
        }
        const auto index = oracle::make_index(vs);
        const EmbeddingVector query(q);
        const auto div = select_documents(index, query, retrieval(RetrievalStrategy::vendi, 0.8, 5, 20));
        const auto sim = select_documents(index, query, retrieval(RetrievalStrategy::similarity, 0.8, 5, 20));
        min_gap = std::min(min_gap, div.vs - sim.vs);
        ok += div.vs > sim.vs;
    }
    return {ok == 50, fmt("%d/50 trials, min VS gap %.3f", ok, min_gap)};
}

// --- 8 -------------------------------------------------------------------------

struct TraceFixture {
    HashEmbedder embedder{64};
    VectorIndex index;

    TraceFixture() {
        const char* texts[] = {"the amber river runs through carrow", "carrow is the capital of veloria",
                               "veloria lies on the coast",         "the lindholm crossing spans a strait",
                               "helena vrask designed the crossing", "the tarn observatory opened in 1870",
                               "glass harmonica music was popular",  "the north quarter burned down"};
        std::vector<Chunk> chunks;
        for (std::size_t i = 0; i < std::size(texts); ++i) {
            auto c = oracle::make_chunk(oracle::doc_id(i));
            c.text = texts[i];
            chunks.push_back(c);
        }
        if (!ingest(index, chunks, embedder).complete()) throw std::runtime_error("fixture ingest failed");
    }

    PipelineResult run(const std::vector<std::string>& judges, PipelineConfig cfg) {
        Scenario sc;
        sc.rules.push_back({PromptRole::reasoning, {}, {}, {}, "step"});
        sc.rules.push_back({PromptRole::answer, {}, {}, {}, "an answer"});
        for (std::size_t i = 0; i < judges.size(); ++i)
            sc.rules.push_back({PromptRole::judge, i, {}, {}, judges[i]});
        sc.rules.push_back({PromptRole::rewrite, {}, {}, {}, "which river crosses carrow"});
        ScriptedProvider llm(sc);
        cfg.retrieval.pool_size = 6;
        cfg.retrieval.select_k = 3;
        return run_pipeline("Which river flows through the capital of Veloria?", index, embedder, llm, cfg);
    }
};

Outcome trace_conformance() {
    TraceFixture f;
    const std::string nine = R"({"C": 9, "R": 9, "Q": 9})";
    const std::string five = R"({"C": 5, "R": 5, "Q": 5})";
    std::vector<std::string> failures;

    PipelineConfig base;
    base.max_iterations = 3;
    const auto a = f.run({nine}, base);
    if (!(a.trace.size() == 1 && a.terminated_by == Termination::threshold && a.trace[0].q_norm >= 0.85))
        failures.push_back("a");

    const auto b = f.run({five, five, five}, base);
    if (!(b.trace.size() == 3 && b.trace[1].s == 0.5 && b.trace[2].s == 0.5 && b.terminated_by == Termination::budget))
        failures.push_back("b");

    PipelineConfig fixed = base;
    fixed.schedule = SSchedule::fixed;
    const auto c = f.run({R"({"C": 2, "R": 2, "Q": 2})", R"({"C": 7, "R": 6, "Q": 8})", five}, fixed);
    bool constant = c.trace.size() == 3;
    for (const auto& st : c.trace) constant = constant && st.s == fixed.s1;
    if (!constant) failures.push_back("c");

    PipelineConfig nojudge = base;
    nojudge.judge_enabled = false;
    const auto d = f.run({}, nojudge);
    if (!(d.trace.size() == 1 && !d.trace[0].verdict)) failures.push_back("d");

    bool identical = true;
    const std::pair<std::vector<std::string>, PipelineConfig> cases[] = {
        {{nine}, base}, {{five, five, five}, base}, {{five, five, five}, fixed}, {{}, nojudge}};
    for (const auto& [judges, cfg] : cases) {
        const auto x = trace_to_json(f.run(judges, cfg), true).dump();
        const auto y = trace_to_json(f.run(judges, cfg), true).dump();
        identical = identical && x == y;
    }
    if (!identical) failures.push_back("byte-identity");

    std::string detail = failures.empty() ? "a-d and byte-identical traces" : "failed:";
    for (const auto& s : failures) detail += " " + s;
    return {failures.empty(), detail};
}

// --- 9 -------------------------------------------------------------------------

Outcome metric_golden_suite() {
    int cases = 0, bad = 0;
    for (const auto& c : golden::metric_cases) {
        ++cases;
        const int em = exact_match(c.prediction, c.gold);
        const double f1 = token_f1(c.prediction, c.gold);
        const int acc = accuracy(c.prediction, c.gold);
        if (em != c.em || std::abs(f1 - c.f1) > metric_tol || acc != c.acc || acc < em) ++bad;
    }
    if (std::abs(token_f1("barack obama", "obama") - 2.0 / 3.0) > metric_tol) ++bad;

    int perms = 0, bad_rank = 0;
    for (std::size_t n = 2; n <= 5; ++n) {
        std::vector<std::string> base;
        for (std::size_t i = 0; i < n; ++i) base.push_back("d" + std::to_string(i));
        auto perm = base;
        do {
            ++perms;
            const auto r = rank_correlations(base, perm);
            std::vector<double> x, y;
            for (std::size_t i = 0; i < n; ++i) {
                x.push_back(double(std::find(base.begin(), base.end(), perm[i]) - base.begin()));
                y.push_back(double(i));
            }
            if (std::abs(r.tau - oracle::kendall_pairs(x, y)) > rank_tol ||
                std::abs(r.rho - oracle::spearman_pairs(x, y)) > rank_tol)
                ++bad_rank;
        } while (std::next_permutation(perm.begin(), perm.end()));
    }
    return {cases >= 20 && bad == 0 && bad_rank == 0,
            fmt("%d metric cases (%d wrong), %d permutations (%d wrong)", cases, bad, perms, bad_rank)};
}

// --- 10 ------------------------------------------------------------------------

Outcome end_to_end_smoke() {
    const fs::path fixtures = VENDI_FIXTURES;
    const auto dir = oracle::temp_dir("acceptance-e2e");
    std::ostringstream out, err;
    cli::Context ctx{out, err};
    ctx.env = [](const char*) { return std::optional<std::string>(); };
    ctx.transport = []() -> std::shared_ptr<HttpTransport> { throw std::runtime_error("network disabled"); };
    ctx.clock = [] { return std::string("fixed"); };
    const auto index = (dir / "corpus.vndx").string();

    int code = cli::run({"ingest", "--corpus", (fixtures / "corpus50.jsonl").string(), "--out", index}, ctx);
    if (code != 0) return {false, "ingest exit " + std::to_string(code) + ": " + err.str()};
    if (load_index(index).size() != 50) return {false, "index does not hold 50 chunks"};

    out.str("");
    code = cli::run({"query", "--index", index, "--question", "Which river flows through the capital of Veloria?",
                     "--scenario", (fixtures / "scenarios" / "smoke.json").string()},
                    ctx);
    if (code != 0 || out.str() != "Amber River\n") return {false, "query gave '" + out.str() + "'"};

    out.str("");
    const auto report_path = dir / "report.json";
    code = cli::run({"eval", "--dataset", (fixtures / "dataset10.jsonl").string(), "--format", "generic-jsonl",
                     "--index", index, "--scenario", (fixtures / "scenarios" / "oracle.json").string(), "--out",
                     report_path.string()},
                    ctx);
    if (code != 0) return {false, "eval exit " + std::to_string(code) + ": " + err.str()};
    const auto report = nlohmann::json::parse(oracle::slurp(report_path));
    const auto& a = report["aggregates"];
    fs::remove_all(dir);
    const bool pass = a["total"] == 10 && a["scored"] == 10 && a["em_pct"] == 100.0 && a["f1_mean"] == 1.0 &&
                      a["acc_pct"] == 100.0;
    return {pass, fmt("EM %.1f%% F1 %.3f Acc %.1f%% over %d examples", a["em_pct"].get<double>(),
                      a["f1_mean"].get<double>(), a["acc_pct"].get<double>(), a["scored"].get<int>())};
}

// --- 11 ------------------------------------------------------------------------

Outcome persistence_round_trip() {
    const auto dir = oracle::temp_dir("acceptance-persist");
    std::mt19937_64 rng(1111);
    std::string detail;
    bool pass = true;
    for (std::size_t n : {std::size_t{0}, std::size_t{1}, std::size_t{10000}}) {
        const std::size_t dim = 32;
        VectorIndex index(IndexMetadata{"persist-" + std::to_string(n), "deterministic-test:hash-v1:32"}, dim);
        std::vector<VectorIndex::Entry> batch;
        for (std::size_t i = 0; i < n; ++i) {
            Chunk c = oracle::make_chunk("c" + std::to_string(i));
            c.title = "t\xc3\xaftle " + std::to_string(i);
            c.token_begin = i;
            c.token_end = i + 5;
            batch.push_back({c, VectorIndex::to_f32(EmbeddingVector(oracle::random_vector(dim, rng)))});
        }
        if (n) index.upsert(std::move(batch));
        const auto path = dir / ("i" + std::to_string(n) + ".vndx");
        save_index(index, path);
        const auto loaded = load_index(path);
        bool same = loaded.size() == n && loaded.dim() == dim && loaded.metadata() == index.metadata();
        for (const auto& e : index.entries()) {
            const auto got = loaded.get(e.chunk.chunk_id);
            same = same && got && got->chunk.text == e.chunk.text && got->chunk.title == e.chunk.title &&
                   got->chunk.token_begin == e.chunk.token_begin &&
                   std::memcmp(got->vector.data(), e.vector.data(), dim * sizeof(float)) == 0;
        }
        same = same && serialize_index(loaded) == oracle::slurp(path);
        pass = pass && same;
        detail += fmt("%s%zu:%s", detail.empty() ? "" : " ", n, same ? "exact" : "MISMATCH");
    }
    fs::remove_all(dir);
    return {pass, "entries " + detail};
}

}  // namespace

int main() {
    set_log_sink(nullptr);
    const std::vector<Criterion> criteria = {
        {1, "Vendi Score exactness", 1, vs_exactness},
        {2, "Eigensolver oracle", 10, eigensolver_oracle},
        {3, "Duplication invariance", 5, duplication_invariance},
        {4, "Endpoint equivalence", 5, endpoint_equivalence},
        {5, "Greedy vs exhaustive", 30, greedy_vs_exhaustive},
        {6, "Sensitivity table shape", 120, sensitivity_shape},
        {7, "Diversity dominance", 60, diversity_dominance},
        {8, "Iteration trace conformance", 10, trace_conformance},
        {9, "Metric golden suite", 10, metric_golden_suite},
        {10, "End-to-end offline smoke", 30, end_to_end_smoke},
        {11, "Persistence round-trip", 30, persistence_round_trip},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs <= c.budget_seconds;
        const bool pass = o.pass && in_time;
        failed += !pass;
        std::cout << (pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << " (" << fmt("%.2f", secs)
                  << " s of " << c.budget_seconds << " s" << (in_time ? "" : ", over budget") << "): " << o.detail
                  << std::endl;
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed;
}
