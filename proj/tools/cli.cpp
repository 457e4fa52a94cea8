#include "cli.hpp"

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "artifacts.hpp"
#include "seglab/event_log.hpp"
#include "seglab/loadtest.hpp"
#include "seglab/metrics.hpp"
#include "seglab/server.hpp"
#include "seglab/session.hpp"
#include "seglab/sim.hpp"

namespace seglab::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

/// Bad flag values: exit code 1.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

fs::path default_data_dir(const char* fallback) {
    if (const char* env = std::getenv(kDataDirEnv); env && *env) return env;
    return fallback;
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) body(i);
        });
}

json stat_json(const Stat& s) { return {{"mean", s.mean}, {"sd", s.stddev}, {"count", s.count}}; }

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::string log_text(const GameLog& log) {
    std::string s = to_jsonl(log.header) + "\n";
    for (const auto& e : log.events) s += to_jsonl(e) + "\n";
    if (log.end) s += to_jsonl(*log.end) + "\n";
    return s;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string policy = "best-response";
    std::string preset = "same";
    std::string tableFile;
    std::string n = "20";
    std::string placement = "uniform";
    int runs = 100;
    std::int64_t periods = 10'000;
    std::int64_t recordEvery = 1'000;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    fs::path out = ".";
    bool trace = false;
    bool svg = false;
    std::string exportLog;
};

/// "20", "13..25" or "13,17,25".
std::vector<int> parse_sizes(const std::string& text) {
    auto to_int = [&](const std::string& s) {
        try {
            std::size_t used = 0;
            const int v = std::stoi(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            throw UsageError("--n: '" + text + "' is not a size, a range a..b or a list a,b,c");
        }
    };
    std::vector<int> sizes;
    if (auto dots = text.find(".."); dots != std::string::npos) {
        const int lo = to_int(text.substr(0, dots)), hi = to_int(text.substr(dots + 2));
        if (lo > hi) throw UsageError("--n: empty range '" + text + "'");
        for (int n = lo; n <= hi; ++n) sizes.push_back(n);
    } else {
        std::stringstream ss(text);
        for (std::string part; std::getline(ss, part, ',');) sizes.push_back(to_int(part));
    }
    if (sizes.empty()) throw UsageError("--n: no sizes given");
    return sizes;
}

int simulate(const SimulateArgs& a, std::ostream& out) {
    SimulationParams base;
    const auto policy = parse_policy(a.policy);
    if (!policy) throw UsageError("unknown policy '" + a.policy + "' (best-response, random-relocation)");
    base.policy = *policy;
    if (!a.tableFile.empty()) {
        try {
            base.table = load_utility_table(a.tableFile);
        } catch (const std::exception& e) {
            throw UsageError(e.what());
        }
    } else {
        const auto kind = parse_game_kind(a.preset);
        if (!kind) throw UsageError("unknown preset '" + a.preset + "' (same, diverse, same-and-diverse, same-or-different)");
        base.table = UtilityTable::preset(*kind);
    }
    if (a.placement == "uniform")
        base.placement = Placement::UniformRandom;
    else if (a.placement == "seat-raster")
        base.placement = Placement::SeatRaster;
    else
        throw UsageError("unknown placement '" + a.placement + "' (uniform, seat-raster)");
    base.runs = a.runs;
    base.periods = a.periods;
    base.recordEvery = a.recordEvery;
    base.seed = a.seed;

    std::vector<SimulationParams> sweep;
    for (int n : parse_sizes(a.n)) {
        SimulationParams p = base;
        p.nAgents = n;
        p.validate();
        sweep.push_back(p);
    }

    const std::string policyName(to_string(base.policy));
    const std::string preset = base.table.name();
    std::string runsCsv = "run,policy,preset,n,segregation,avgScore,avgNeighbors,seed,moves\n";
    std::string summaryCsv =
        "policy,preset,n,runs,periods,seed,segregation_mean,segregation_sd,segregation_runs,avgScore_mean,"
        "avgScore_sd,avgNeighbors_mean,avgNeighbors_sd\n";
    std::string traceCsv = "n,run,period,segregation,avgScore,avgNeighbors\n";
    json summary = {{"policy", policyName},
                    {"preset", preset},
                    {"table", base.table.bins()},
                    {"runs", base.runs},
                    {"periods", base.periods},
                    {"seed", base.seed},
                    {"placement", a.placement},
                    {"rows", json::array()}};
    std::vector<Series> chart;

    for (const auto& p : sweep) {
        const BatchSummary b = batch(p, a.threads);
        for (std::size_t i = 0; i < b.runs.size(); ++i) {
            const RunResult& r = b.runs[i];
            runsCsv += std::to_string(i) + "," + policyName + "," + preset + "," + std::to_string(p.nAgents) + "," +
                       num(r.finalMetrics.segregation) + "," + num(r.finalMetrics.avgScore) + "," +
                       num(r.finalMetrics.avgNeighbors) + "," + std::to_string(r.seed) + "," +
                       std::to_string(r.moves) + "\n";
            if (a.trace)
                for (const auto& t : r.trace)
                    traceCsv += std::to_string(p.nAgents) + "," + std::to_string(i) + "," + std::to_string(t.period) +
                                "," + num(t.metrics.segregation) + "," + num(t.metrics.avgScore) + "," +
                                num(t.metrics.avgNeighbors) + "\n";
        }
        summaryCsv += policyName + "," + preset + "," + std::to_string(p.nAgents) + "," + std::to_string(p.runs) + "," +
                      std::to_string(p.periods) + "," + std::to_string(p.seed) + "," + num(b.segregation.mean) + "," +
                      num(b.segregation.stddev) + "," + std::to_string(b.segregation.count) + "," +
                      num(b.avgScore.mean) + "," + num(b.avgScore.stddev) + "," + num(b.avgNeighbors.mean) + "," +
                      num(b.avgNeighbors.stddev) + "\n";
        summary["rows"].push_back({{"n", p.nAgents},
                                   {"segregation", stat_json(b.segregation)},
                                   {"avgScore", stat_json(b.avgScore)},
                                   {"avgNeighbors", stat_json(b.avgNeighbors)}});
        out << "n=" << p.nAgents << "  segregation " << num(b.segregation.mean) << " (sd " << num(b.segregation.stddev)
            << ")  avgScore " << num(b.avgScore.mean) << "  avgNeighbors " << num(b.avgNeighbors.mean) << "\n";

        if (a.svg && sweep.size() == 1) {
            // Mean segregation over the sampled periods.
            std::map<std::int64_t, std::pair<double, int>> acc;
            for (const auto& r : b.runs)
                for (const auto& t : r.trace)
                    if (t.metrics.segregation) {
                        acc[t.period].first += *t.metrics.segregation;
                        ++acc[t.period].second;
                    }
            Series s{"n=" + std::to_string(p.nAgents), {}};
            for (const auto& [period, sum] : acc)
                s.points.emplace_back(static_cast<double>(period), sum.first / sum.second);
            chart.push_back(std::move(s));
        }
    }
    if (a.svg && sweep.size() > 1) {
        Series s{preset, {}};
        for (const auto& row : summary["rows"])
            s.points.emplace_back(row["n"].get<double>(), row["segregation"]["mean"].get<double>());
        chart.push_back(std::move(s));
    }

    OutputSet files;
    files.add(a.out / "runs.csv", runsCsv);
    files.add(a.out / "summary.csv", summaryCsv);
    files.add(a.out / "summary.json", summary.dump(2) + "\n");
    if (a.trace) files.add(a.out / "trace.csv", traceCsv);
    if (a.svg) {
        const bool bySize = sweep.size() > 1;
        files.add(a.out / "simulate.svg",
                  line_chart(policyName + ", " + preset, bySize ? "agents" : "period", "mean segregation (%)", chart,
                             100.0));
    }
    if (!a.exportLog.empty()) {
        GameLog log;
        run(sweep.front(), run_seed(sweep.front().seed, 0), &log);
        files.add(a.exportLog, log_text(log));
    }
    files.commit();
    for (const auto& [path, _] : files.files()) out << "wrote " << path.string() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- serve

struct ServeArgs {
    std::string address = "127.0.0.1";
    unsigned short port = 8080;
    std::string dataDir;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    int broadcastMs = 100;
};

int serve(const ServeArgs& a, std::ostream& out) {
    if (a.broadcastMs < 1) throw UsageError("--broadcast-ms must be positive");
    if (a.threads < 1) throw UsageError("--threads must be at least 1");
    ServerOptions o;
    o.address = a.address;
    o.port = a.port;
    o.dataDir = a.dataDir.empty() ? default_data_dir("data") : fs::path(a.dataDir);
    o.seed = a.seed;
    o.threads = a.threads;
    o.broadcastInterval = std::chrono::milliseconds(a.broadcastMs);

    // Block the signals before any I/O thread exists so only sigwait sees them.
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    Server server(o);
    server.start();
    out << "listening on ws://" << o.address << ":" << server.port() << "/<session>  data-dir "
        << o.dataDir.string() << std::endl;
    int sig = 0;
    sigwait(&set, &sig);
    out << "shutting down" << std::endl;
    server.stop();
    for (const auto& p : server.logs()) out << "log " << p.string() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- analyze

struct AnalyzeArgs {
    std::vector<std::string> logs;
    std::vector<std::string> metrics;
    std::int64_t sampleMs = 1000;
    int baselineTrials = 10'000;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    fs::path out = ".";
    bool svg = false;
};

struct Analysis {
    fs::path path;
    GameLog log;
    ReplayResult replayed;
    std::optional<MetricsSnapshot> final;
    std::vector<SeriesPoint> series;
    LatencyTable latency;
    TransitionMatrix transitions;
    std::optional<double> adjacency;
    int seated = 0;
    std::string error;
};

std::vector<fs::path> expand_logs(const std::vector<std::string>& args) {
    std::vector<fs::path> paths;
    for (const auto& a : args) {
        if (fs::is_directory(a)) {
            std::vector<fs::path> found;
            for (const auto& e : fs::directory_iterator(a))
                if (e.is_regular_file() && e.path().extension() == ".jsonl") found.push_back(e.path());
            std::sort(found.begin(), found.end());
            paths.insert(paths.end(), found.begin(), found.end());
        } else {
            paths.emplace_back(a);
        }
    }
    return paths;
}

int analyze(const AnalyzeArgs& a, std::ostream& out, std::ostream& err) {
    static const std::set<std::string> known = {"series", "latency", "transitions", "adjacency", "all"};
    std::set<std::string> wanted;
    for (const auto& m : a.metrics) {
        if (!known.contains(m)) throw UsageError("unknown metric '" + m + "' (series, latency, transitions, adjacency, all)");
        wanted.insert(m);
    }
    if (wanted.empty() || wanted.contains("all")) wanted = {"series", "latency", "transitions", "adjacency"};
    if (a.sampleMs < 1) throw UsageError("--sample-ms must be positive");
    if (a.baselineTrials < 1) throw UsageError("--baseline-trials must be positive");
    const std::vector<fs::path> paths = expand_logs(a.logs);
    if (paths.empty()) throw UsageError("no logs to analyze");

    std::vector<Analysis> results(paths.size());
    parallel_for(paths.size(), a.threads, [&](std::size_t i) {
        Analysis& r = results[i];
        r.path = paths[i];
        try {
            r.log = read_game_log(r.path);
            r.replayed = replay(r.log);
            const UtilityTable& table = r.log.header.table;
            if (!r.log.header.roster.empty()) {
                r.final = snapshot(r.replayed.finalGrid, table);
                if (wanted.contains("series")) r.series = time_series(r.log, table, a.sampleMs);
            }
            if (wanted.contains("latency")) r.latency = latency_table(r.log);
            if (wanted.contains("transitions")) r.transitions = transition_matrix(r.log, table);
            if (wanted.contains("adjacency")) {
                const Seating seats = seating_from(r.log.header);
                r.seated = static_cast<int>(std::count_if(seats.begin(), seats.end(), [](auto& s) { return s.has_value(); }));
                if (r.seated > 0) r.adjacency = adjacency_score(r.replayed.finalGrid, seats);
            }
        } catch (const std::exception& e) {
            r.error = r.path.string() + ": " + e.what();
        }
    });
    bool failed = false;
    for (const auto& r : results)
        if (!r.error.empty()) {
            err << r.error << "\n";
            failed = true;
        }
    if (failed) return kExitRuntime;

    OutputSet files;
    json summary = {{"logs", json::array()}};
    for (const auto& r : results) {
        const auto accepted = std::count_if(r.log.events.begin(), r.log.events.end(), [](auto& e) { return e.accepted; });
        json entry = {{"path", r.path.string()},
                      {"source", r.log.header.source},
                      {"session", r.log.header.session},
                      {"game", r.log.header.game},
                      {"trial", r.log.header.trial},
                      {"kind", r.log.header.table.name()},
                      {"agents", r.log.header.roster.size()},
                      {"events", r.log.events.size()},
                      {"accepted", accepted},
                      {"durationMs", r.log.duration_ms()},
                      {"endReason", r.log.end ? json(r.log.end->reason) : json(nullptr)},
                      {"final", nullptr}};
        if (r.final)
            entry["final"] = {{"segregation", opt_json(r.final->segregation)},
                              {"avgScore", r.final->avgScore},
                              {"avgNeighbors", r.final->avgNeighbors}};
        summary["logs"].push_back(std::move(entry));
    }
    files.add(a.out / "summary.json", summary.dump(2) + "\n");

    auto label = [](const Analysis& r) { return r.path.filename().string(); };
    auto ident = [&](const Analysis& r) {
        return label(r) + "," + r.log.header.session + "," + std::to_string(r.log.header.game) + "," +
               r.log.header.table.name();
    };

    if (wanted.contains("series")) {
        std::string csv = "log,session,game,kind,tMs,segregation,avgScore,avgNeighbors\n";
        std::vector<Series> chart;
        for (const auto& r : results) {
            Series s{label(r), {}};
            for (const auto& p : r.series) {
                csv += ident(r) + "," + std::to_string(p.tMs) + "," + num(p.metrics.segregation) + "," +
                       num(p.metrics.avgScore) + "," + num(p.metrics.avgNeighbors) + "\n";
                if (p.metrics.segregation) s.points.emplace_back(static_cast<double>(p.tMs), *p.metrics.segregation);
            }
            chart.push_back(std::move(s));
        }
        files.add(a.out / "series.csv", csv);
        if (a.svg) files.add(a.out / "series.svg", line_chart("segregation over time", "tMs", "segregation (%)", chart, 100.0));
    }

    // Behavioral tables pool every log of one utility table.
    if (wanted.contains("latency")) {
        std::map<std::string, LatencyTable> pooled;
        for (const auto& r : results) pooled[r.log.header.table.name()].merge(r.latency);
        std::string csv = "kind,same,different,totalSeconds,moveOuts,meanLatency\n";
        for (const auto& [kind, t] : pooled)
            for (const auto& [cfg, cell] : t.cells())
                csv += kind + "," + std::to_string(cfg.same) + "," + std::to_string(cfg.different) + "," +
                       num(cell.totalSeconds) + "," + std::to_string(cell.moveOuts) + "," + num(cell.meanLatency()) +
                       "\n";
        files.add(a.out / "latency.csv", csv);
    }
    if (wanted.contains("transitions")) {
        std::map<std::string, TransitionMatrix> pooled;
        for (const auto& r : results) pooled[r.log.header.table.name()].merge(r.transitions);
        std::string csv = "kind,moveOut,moveIn,count,frequency\n";
        for (const auto& [kind, m] : pooled)
            for (int from : m.rows())
                for (int to : m.columns())
                    csv += kind + "," + std::to_string(from) + "," + std::to_string(to) + "," +
                           std::to_string(m.count(from, to)) + "," + num(m.frequency(from, to)) + "\n";
        files.add(a.out / "transitions.csv", csv);
    }
    if (wanted.contains("adjacency")) {
        std::map<int, double> baselines;
        std::string csv = "log,session,game,kind,players,score,baseline\n";
        for (const auto& r : results) {
            if (r.seated == 0) continue;
            auto [it, fresh] = baselines.try_emplace(r.seated, 0.0);
            if (fresh) it->second = adjacency_baseline(r.seated, a.baselineTrials, a.seed);
            csv += ident(r) + "," + std::to_string(r.seated) + "," + num(r.adjacency) + "," + num(it->second) + "\n";
        }
        files.add(a.out / "adjacency.csv", csv);
    }
    files.commit();
    out << "analyzed " << results.size() << " log(s)\n";
    for (const auto& [path, _] : files.files()) out << "wrote " << path.string() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- loadtest

struct LoadtestArgs {
    LoadtestOptions options;
    std::string policy = "random";
    std::string kind = "same";
    std::string dataDir;
    double durationSec = 120.0;
    std::string out;
};

int loadtest(LoadtestArgs a, std::ostream& out) {
    LoadtestOptions& o = a.options;
    const auto policy = parse_bot_policy(a.policy);
    if (!policy) throw UsageError("unknown bot policy '" + a.policy + "' (random, greedy)");
    o.policy = *policy;
    const auto kind = parse_game_kind(a.kind);
    if (!kind) throw UsageError("unknown game kind '" + a.kind + "'");
    o.kind = *kind;
    o.durationMs = static_cast<std::int64_t>(a.durationSec * 1000.0 + 0.5);
    o.dataDir = a.dataDir.empty() ? default_data_dir("loadtest-data") : fs::path(a.dataDir);
    o.validate();

    const LoadtestReport r = run_loadtest(o);
    const std::string report = r.to_json();
    if (!a.out.empty()) {
        OutputSet files;
        files.add(a.out, report + "\n");
        files.commit();
    }
    out << report << "\n";
    const bool ok = r.invariantViolations == 0 && r.replayOk.value_or(true);
    return ok ? kExitOk : kExitRuntime;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Segregation game lab: simulations, live game server, log analysis"};
    app.name("seglab");
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "Batch agent-based simulation");
    s->add_option("--policy", sim.policy, "best-response | random-relocation")->capture_default_str();
    s->add_option("--preset", sim.preset, "same | diverse | same-and-diverse | same-or-different")->capture_default_str();
    s->add_option("--table", sim.tableFile, "JSON utility table file (overrides --preset)");
    s->add_option("--n", sim.n, "agents: 20, a range 13..25 or a list 13,20,25")->capture_default_str();
    s->add_option("--runs", sim.runs)->capture_default_str();
    s->add_option("--periods", sim.periods)->capture_default_str();
    s->add_option("--record-every", sim.recordEvery, "trace stride in periods")->capture_default_str();
    s->add_option("--seed", sim.seed)->capture_default_str();
    s->add_option("--placement", sim.placement, "uniform | seat-raster")->capture_default_str();
    s->add_option("--threads", sim.threads, "0 = all cores")->capture_default_str();
    s->add_option("--out", sim.out, "output directory")->capture_default_str();
    s->add_flag("--trace", sim.trace, "also write trace.csv");
    s->add_flag("--svg", sim.svg, "also write simulate.svg");
    s->add_option("--export-log", sim.exportLog, "write run 0 of the first size as a JSONL game log");

    ServeArgs srv;
    auto* v = app.add_subcommand("serve", "Run the live game server until SIGINT/SIGTERM");
    v->add_option("--address", srv.address)->capture_default_str();
    v->add_option("--port", srv.port, "0 picks a free port")->capture_default_str();
    v->add_option("--data-dir", srv.dataDir, std::string("log directory (default $") + kDataDirEnv + " or ./data)");
    v->add_option("--seed", srv.seed)->capture_default_str();
    v->add_option("--threads", srv.threads)->capture_default_str();
    v->add_option("--broadcast-ms", srv.broadcastMs, "state broadcast interval")->capture_default_str();

    AnalyzeArgs an;
    auto* z = app.add_subcommand("analyze", "Metric tables from JSONL game logs");
    z->add_option("logs", an.logs, "log files or directories of *.jsonl")->required();
    z->add_option("--metric", an.metrics, "series | latency | transitions | adjacency | all (repeatable)");
    z->add_option("--sample-ms", an.sampleMs, "series sampling interval")->capture_default_str();
    z->add_option("--baseline-trials", an.baselineTrials)->capture_default_str();
    z->add_option("--seed", an.seed, "seed for the adjacency baseline")->capture_default_str();
    z->add_option("--threads", an.threads, "0 = all cores")->capture_default_str();
    z->add_option("--out", an.out, "output directory")->capture_default_str();
    z->add_flag("--svg", an.svg, "also write series.svg");

    LoadtestArgs lt;
    auto* l = app.add_subcommand("loadtest", "Scripted bots playing one game over the wire protocol");
    l->add_option("--host", lt.options.host)->capture_default_str();
    l->add_option("--port", lt.options.port, "0 runs a private in-process server")->capture_default_str();
    l->add_option("--data-dir", lt.dataDir, "log directory for the in-process server");
    l->add_option("--session", lt.options.session)->capture_default_str();
    l->add_option("--players", lt.options.players)->capture_default_str();
    l->add_option("--policy", lt.policy, "random | greedy")->capture_default_str();
    l->add_option("--moves-per-sec", lt.options.movesPerSec, "aggregate over all bots")->capture_default_str();
    l->add_option("--duration", lt.durationSec, "game length in seconds")->capture_default_str();
    l->add_option("--kind", lt.kind, "table of the scored game")->capture_default_str();
    l->add_option("--seed", lt.options.seed)->capture_default_str();
    l->add_option("--out", lt.out, "also write the report to this file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (*s) return simulate(sim, out);
        if (*v) return serve(srv, out);
        if (*z) return analyze(an, out, err);
        if (*l) return loadtest(lt, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitValidation;
}

}  // namespace seglab::cli
