// graff: match scans, query distances, run benchmark campaigns.
//
// Exit codes: 0 success (match: verified), 1 input or usage error,
// 2 match attempt failed.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <fmt/format.h>

#include "graff/bench.hpp"
#include "graff/scan_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitFailed = 2;

struct MatchOptions {
    std::string scan_a;
    std::string scan_b;
    double rho = 40.0;
    double epsilon = 0.2;
    double sigma = 0.02;
    std::string distance_fn = "graff_shifted";
    std::string output;
    std::string truth;
};

struct DistanceOptions {
    std::string scan;
    std::size_t index_a = 0;
    std::size_t index_b = 0;
    double rho = 40.0;
};

struct BenchOptions {
    std::string config;
    std::string out;
    int workers = 1;
    bool timing = false;
};

struct SimulateOptions {
    std::uint64_t seed = 0;
    double baseline = 0.0;
    double overlap = 1.0;
    int clutter = 0;
    double noise_angle_deg = 0.0;
    double noise_offset_m = 0.0;
    std::string out;
};

graff::ScanDocument load_scan_reporting(const std::string &path) {
    graff::ScanDocument doc = graff::load_scan(path);
    for (const std::string &w : doc.warnings) {
        std::cerr << "warning: " << w << '\n';
    }
    return doc;
}

void emit(const std::string &path, const std::string &text) {
    if (path.empty() || path == "-") {
        std::cout << text;
    } else {
        graff::write_file(path, text);
    }
}

int cmd_match(const MatchOptions &opt) {
    const auto fn = graff::parse_distance_function(opt.distance_fn);
    if (!fn) {
        throw graff::InvalidInput("unknown distance function '" + opt.distance_fn + "'");
    }
    const graff::ScanDocument a = load_scan_reporting(opt.scan_a);
    const graff::ScanDocument b = load_scan_reporting(opt.scan_b);
    std::optional<graff::RigidTransform> truth;
    if (!opt.truth.empty()) {
        truth = graff::load_transform(opt.truth);
    }

    graff::MatchParams params;
    params.consistency.rho = opt.rho;
    params.consistency.epsilon = opt.epsilon;
    params.consistency.sigma = opt.sigma;
    const graff::MatchOutcome outcome =
        graff::match_scans({a.scan, a.centroids}, {b.scan, b.centroids}, params, *fn);

    json report;
    report["scan_a"] = a.scan.id;
    report["scan_b"] = b.scan.id;
    report["params"] = {{"distance_fn", opt.distance_fn},
                        {"rho", graff::rounded(opt.rho)},
                        {"epsilon", graff::rounded(opt.epsilon)},
                        {"sigma", graff::rounded(opt.sigma)}};
    if (graff::needs_centroids(*fn)) {
        report["params"]["centroid_epsilon"] = graff::rounded(params.centroid_epsilon);
        report["params"]["centroid_sigma"] = graff::rounded(params.centroid_sigma);
    }
    report["candidates"] = outcome.candidates;
    report["objective"] = graff::rounded(outcome.selection.objective);
    json pairs = json::array();
    for (const graff::Candidate &c : outcome.matches) {
        pairs.push_back(json::array({c.a, c.b}));
    }
    report["correspondences"] = pairs;

    bool verified = outcome.estimate.has_value();
    if (outcome.estimate) {
        const graff::RigidTransform &T = *outcome.estimate;
        const json tj = graff::transform_to_json(T);
        report["rotation"] = tj["rotation"];
        const Eigen::Vector4d q = graff::quaternion_wxyz(T.R);
        report["quaternion_wxyz"] = json::array(
            {graff::rounded(q(0)), graff::rounded(q(1)), graff::rounded(q(2)), graff::rounded(q(3))});
        report["translation"] = tj["translation"];
        json residuals = json::array();
        for (const graff::Candidate &c : outcome.matches) {
            const graff::GraffElement &src = a.scan.objects[c.a];
            const graff::GraffElement &tgt = b.scan.objects[c.b];
            const graff::MatchResidual r =
                src.is_line() ? graff::match_residual(T, graff::to_pd(src), graff::to_pd(tgt))
                              : graff::match_residual(T, graff::to_hesse(src), graff::to_hesse(tgt));
            residuals.push_back({{"pair", json::array({c.a, c.b})},
                                 {"angle_rad", graff::rounded(r.angle_rad)},
                                 {"offset_m", graff::rounded(r.offset_m)}});
        }
        report["residuals"] = residuals;
        if (truth) {
            const graff::AlignmentError e = graff::alignment_error(T, *truth);
            report["truth_error"] = {{"rotation_deg", graff::rounded(e.rotation_deg)},
                                     {"translation_m", graff::rounded(e.translation_m)}};
            verified = graff::verify(e);
        }
    } else {
        report["error"] = outcome.failure;
    }
    report["status"] = verified ? "verified" : "failed";
    emit(opt.output, graff::dump(report));
    return verified ? kExitOk : kExitFailed;
}

int cmd_distance(const DistanceOptions &opt) {
    const graff::ScanDocument doc = load_scan_reporting(opt.scan);
    const std::size_t n = doc.scan.size();
    if (opt.index_a >= n || opt.index_b >= n) {
        throw graff::InvalidInput(
            fmt::format("index out of range: scan '{}' has {} objects", doc.scan.id, n));
    }
    const graff::GraffElement &x = doc.scan.objects[opt.index_a];
    const graff::GraffElement &y = doc.scan.objects[opt.index_b];
    // Same ordering rule as the consistency graph for mixed pairs.
    const graff::AngleVector theta = y.dim() < x.dim() ? graff::shifted_graff_angles(y, x, opt.rho)
                                                       : graff::shifted_graff_angles(x, y, opt.rho);
    std::string angles;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        angles += fmt::format("{}{:.12g}", i == 0 ? "" : " ", theta(i));
    }
    fmt::print("distance {:.12g}\nangles {}\n", theta.norm(), angles);
    return kExitOk;
}

int cmd_bench(const BenchOptions &opt) {
    graff::CampaignConfig cfg = graff::load_campaign_config(opt.config);
    if (opt.timing) {
        cfg.params.measure_time = true;
    }
    std::error_code ec;
    fs::create_directories(opt.out, ec);
    if (ec || !fs::is_directory(opt.out)) {
        throw graff::InvalidInput(fmt::format("{}: cannot create output directory", opt.out));
    }
    const std::vector<graff::TrialRecord> records = graff::run_campaign(cfg, opt.workers);
    const graff::CampaignSummary summary = graff::summarize(cfg, records);
    graff::write_file(fs::path(opt.out) / "results.csv", graff::records_csv(cfg, records));
    graff::write_file(fs::path(opt.out) / "summary.json",
                      graff::dump(graff::summary_json(cfg, summary)));
    for (const graff::SummaryRow &row : summary.by_tier) {
        fmt::print("{:<8} {:<22} recall@100%P {:.3f}  accepted {}/{}\n", row.tier,
                   graff::to_string(row.fn), row.metrics.recall_at_full_precision,
                   row.metrics.accepted, row.metrics.trials);
    }
    return kExitOk;
}

int cmd_simulate(const SimulateOptions &opt) {
    graff::SceneConfig scene_cfg;
    scene_cfg.seed = opt.seed;
    const graff::LandmarkScene scene = graff::generate_scene(scene_cfg);
    graff::PairConfig pcfg;
    pcfg.seed = graff::splitmix64(opt.seed);
    pcfg.baseline = opt.baseline;
    pcfg.overlap = opt.overlap;
    pcfg.clutter = opt.clutter;
    pcfg.noise_angle_rad = opt.noise_angle_deg * 3.14159265358979323846 / 180.0;
    pcfg.noise_offset_m = opt.noise_offset_m;
    const graff::LoopPair pair = graff::make_loop_pair(scene, scene_cfg, pcfg);

    std::error_code ec;
    fs::create_directories(opt.out, ec);
    if (ec || !fs::is_directory(opt.out)) {
        throw graff::InvalidInput(fmt::format("{}: cannot create output directory", opt.out));
    }
    const fs::path dir(opt.out);
    graff::write_file(dir / "scan_a.json", graff::dump(graff::scan_to_json(pair.scan_i, pair.centroids_i)));
    graff::write_file(dir / "scan_b.json", graff::dump(graff::scan_to_json(pair.scan_j, pair.centroids_j)));
    graff::write_file(dir / "truth.json", graff::dump(graff::transform_to_json(pair.truth)));
    json gt = json::array();
    for (const graff::Candidate &c : pair.ground_truth) {
        gt.push_back(json::array({c.a, c.b}));
    }
    graff::write_file(dir / "ground_truth.json", graff::dump(gt));
    return kExitOk;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"Line/plane scan matching on the affine Grassmannian"};
    app.require_subcommand(1);

    MatchOptions match;
    CLI::App *m = app.add_subcommand("match", "Match two scan files and estimate the transform");
    m->add_option("scan_a", match.scan_a, "source scan (JSON)")->required();
    m->add_option("scan_b", match.scan_b, "target scan (JSON)")->required();
    m->add_option("--rho", match.rho, "displacement scaling, meters")->capture_default_str();
    m->add_option("--epsilon", match.epsilon, "consistency gate, radians")->capture_default_str();
    m->add_option("--sigma", match.sigma, "kernel width, radians")->capture_default_str();
    m->add_option("--distance-fn", match.distance_fn, "internal distance function")
        ->capture_default_str();
    m->add_option("--output", match.output, "report path (default: stdout)");
    m->add_option("--truth", match.truth, "ground-truth transform file; enables verification");

    DistanceOptions dist;
    CLI::App *d = app.add_subcommand("distance", "Shifted distance between two objects of a scan");
    d->add_option("scan", dist.scan, "scan (JSON)")->required();
    d->add_option("index_a", dist.index_a, "first object index")->required();
    d->add_option("index_b", dist.index_b, "second object index")->required();
    d->add_option("--rho", dist.rho, "displacement scaling, meters")->capture_default_str();

    BenchOptions bench;
    CLI::App *b = app.add_subcommand("bench", "Run a benchmark campaign");
    b->add_option("config", bench.config, "campaign config (key = value)")->required();
    b->add_option("--out", bench.out, "output directory")->required();
    b->add_option("--workers", bench.workers, "worker threads")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    b->add_flag("--timing", bench.timing, "record wall-clock durations (output not reproducible)");

    SimulateOptions sim;
    CLI::App *s = app.add_subcommand("simulate", "Write a synthetic scan pair and its truth");
    s->add_option("--seed", sim.seed, "random seed")->required();
    s->add_option("--baseline", sim.baseline, "sensor distance, meters")->capture_default_str();
    s->add_option("--overlap", sim.overlap, "retained fraction")->capture_default_str();
    s->add_option("--clutter", sim.clutter, "extra objects per scan")->capture_default_str();
    s->add_option("--noise-angle-deg", sim.noise_angle_deg)->capture_default_str();
    s->add_option("--noise-offset-m", sim.noise_offset_m)->capture_default_str();
    s->add_option("--out", sim.out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (*m) {
            return cmd_match(match);
        }
        if (*d) {
            return cmd_distance(dist);
        }
        if (*b) {
            return cmd_bench(bench);
        }
        return cmd_simulate(sim);
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }
}
