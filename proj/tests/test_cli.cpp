#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "graff/scan_io.hpp"
#include "malformed_corpus.hpp"
#include "test_util.hpp"

using namespace graff;
using namespace graff::testing;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

fs::path scratch() {
    static const fs::path dir = [] {
        const fs::path d = fs::temp_directory_path() / "graff_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Run run(const std::string &args) {
    const fs::path err = scratch() / "stderr.txt";
    const std::string cmd = std::string(GRAFF_CLI_PATH) + " " + args + " 2>" + err.string();
    Run r;
    FILE *pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) {
        r.out.append(buf.data(), n);
    }
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = slurp(err);
    return r;
}

fs::path write(const std::string &name, const std::string &text) {
    const fs::path p = scratch() / name;
    write_file(p, text);
    return p;
}

fs::path write_scan(const std::string &name, const Scan &scan) {
    return write(name, dump(scan_to_json(scan)));
}

}  // namespace

TEST_CASE("usage errors") {
    CHECK(run("").code == 1);
    CHECK(run("frobnicate").code == 1);
    CHECK(run("--help").code == 0);
    CHECK(run("match only_one.json").code == 1);
    CHECK(run("bench cfg --out x --workers 0").code == 1);
}

TEST_CASE("distance subcommand") {
    Scan scan;
    scan.id = "fixture";
    scan.objects.push_back(from_pd(LinePD{Eigen::Vector3d::UnitZ(), Eigen::Vector3d::Zero()}));
    scan.objects.push_back(from_pd(LinePD{Eigen::Vector3d::UnitZ(), Eigen::Vector3d::UnitX()}));
    scan.objects.push_back(from_hesse(PlaneHesse{Eigen::Vector3d::UnitX(), 5.0}));
    const fs::path path = write_scan("fixture.json", scan);

    Run r = run("distance " + path.string() + " 0 1 --rho 1");
    CHECK(r.code == 0);
    CHECK(r.out.find("distance 0.785398163397\n") == 0);

    r = run("distance " + path.string() + " 1 1");
    CHECK(r.out.find("distance 0\n") == 0);

    r = run("distance " + path.string() + " 0 2");
    CHECK(r.code == 0);
    const std::string angles = r.out.substr(r.out.find("angles ") + 7);
    CHECK(std::count(angles.begin(), angles.end(), ' ') == 1);

    r = run("distance " + path.string() + " 0 3");
    CHECK(r.code == 1);
    CHECK(r.err.find("out of range") != std::string::npos);
    CHECK(run("distance /nonexistent.json 0 1").code == 1);
}

TEST_CASE("match a transformed copy") {
    Rng rng(60);
    Scan a;
    a.id = "a";
    for (int i = 0; i < 20; ++i) {
        a.objects.push_back(i < 6 ? random_line(rng, 30.0) : random_plane(rng, 30.0));
    }
    const RigidTransform T = random_transform(rng, 10.0);
    Scan b;
    b.id = "b";
    std::vector<std::size_t> perm(a.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t k : perm) {
        b.objects.push_back(a.objects[k].transformed(T));
    }
    const fs::path pa = write_scan("a.json", a);
    const fs::path pb = write_scan("b.json", b);
    const fs::path pt = write("truth.json", dump(transform_to_json(T)));

    const Run r = run("match " + pa.string() + " " + pb.string() + " --truth " + pt.string());
    CHECK(r.code == 0);
    const json rep = json::parse(r.out);
    CHECK(rep["status"] == "verified");
    CHECK(rep["params"]["rho"] == 40.0);
    CHECK(rep["params"]["epsilon"] == 0.2);
    CHECK(rep["params"]["sigma"] == 0.02);
    CHECK(rep["correspondences"].size() == 20);
    CHECK(rep["truth_error"]["rotation_deg"].get<double>() < 1e-8);
    CHECK(rep["truth_error"]["translation_m"].get<double>() < 1e-8);
    for (const json &pair : rep["correspondences"]) {
        CHECK(perm[pair[1].get<std::size_t>()] == pair[0].get<std::size_t>());
    }

    // The reported transform maps every matched source onto its target.
    RigidTransform est;
    for (int k = 0; k < 9; ++k) {
        est.R(k / 3, k % 3) = rep["rotation"][k].get<double>();
    }
    for (int k = 0; k < 3; ++k) {
        est.t(k) = rep["translation"][k].get<double>();
    }
    for (const json &res : rep["residuals"]) {
        const std::size_t i = res["pair"][0];
        const std::size_t j = res["pair"][1];
        const GraffElement moved = a.objects[i].transformed(est);
        CHECK(graff_distance(moved, b.objects[j], 40.0) < 1e-6);
        CHECK(res["angle_rad"].get<double>() < 1e-8);
        CHECK(res["offset_m"].get<double>() < 1e-8);
    }
    const json &q = rep["quaternion_wxyz"];
    CHECK(q[0].get<double>() >= 0.0);
    const Eigen::Quaterniond quat(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(),
                                  q[3].get<double>());
    CHECK((quat.toRotationMatrix() - est.R).norm() < 1e-9);

    // Report file and stdout agree; repeated runs are identical.
    const fs::path out = scratch() / "report.json";
    CHECK(run("match " + pa.string() + " " + pb.string() + " --truth " + pt.string() +
              " --output " + out.string())
              .code == 0);
    CHECK(slurp(out) == r.out);
    CHECK(run("match " + pa.string() + " " + pb.string() + " --truth " + pt.string()).out == r.out);
    CHECK(run("match " + pa.string() + " " + pb.string() + " --distance-fn cosine").code == 1);
}

TEST_CASE("too few consistent matches") {
    Scan a;
    a.id = "small_a";
    a.objects.push_back(from_hesse(PlaneHesse{Eigen::Vector3d::UnitX(), 1.0}));
    a.objects.push_back(from_hesse(PlaneHesse{Eigen::Vector3d::UnitY(), 2.0}));
    Scan b = a;
    b.id = "small_b";
    const Run r = run("match " + write_scan("sa.json", a).string() + " " +
                      write_scan("sb.json", b).string());
    CHECK(r.code == 2);
    const json rep = json::parse(r.out);
    CHECK(rep["status"] == "failed");
    CHECK(rep.contains("error"));
}

TEST_CASE("malformed scans exit with an input error") {
    Scan good;
    good.id = "good";
    good.objects.push_back(from_hesse(PlaneHesse{Eigen::Vector3d::UnitX(), 1.0}));
    const fs::path ok = write_scan("good.json", good);
    int k = 0;
    for (const MalformedCase &c : kMalformedScans) {
        CAPTURE(c.name);
        const fs::path bad = write(fmt::format("bad{}.json", k++), std::string(c.text));
        const Run r = run("match " + bad.string() + " " + ok.string());
        CHECK(r.code == 1);
        CHECK(r.err.find("error: ") == 0);
        CHECK(r.err.size() > 8);
        CHECK(r.out.empty());
    }
}

TEST_CASE("simulate then match") {
    const fs::path dir = scratch() / "sim";
    const std::string sim = "simulate --seed 21 --baseline 8 --overlap 0.9 --clutter 3 "
                            "--noise-angle-deg 0.5 --noise-offset-m 0.05 --out ";
    CHECK(run(sim + dir.string()).code == 0);
    CHECK(run(sim + (scratch() / "sim2").string()).code == 0);
    for (const char *f : {"scan_a.json", "scan_b.json", "truth.json", "ground_truth.json"}) {
        CHECK(slurp(dir / f) == slurp(scratch() / "sim2" / f));
        CHECK(slurp(dir / f).back() == '\n');
    }
    const Run r = run("match " + (dir / "scan_a.json").string() + " " +
                      (dir / "scan_b.json").string() + " --truth " + (dir / "truth.json").string());
    CHECK(r.code == 0);
    const json rep = json::parse(r.out);
    CHECK(rep["truth_error"]["translation_m"].get<double>() < 1.0);

    const Run c = run("match " + (dir / "scan_a.json").string() + " " +
                      (dir / "scan_b.json").string() + " --distance-fn gr_times_euclidean");
    CHECK(c.code == 0);
    CHECK(json::parse(c.out)["params"].contains("centroid_epsilon"));
}

TEST_CASE("bench subcommand") {
    const fs::path cfg = write("bench.cfg", "seed = 8\ntrials = 2\ndistance_fns = graff_shifted, gr_only\n");
    const fs::path one = scratch() / "bench1";
    const fs::path four = scratch() / "bench4";
    Run r = run("bench " + cfg.string() + " --out " + one.string());
    CHECK(r.code == 0);
    CHECK(r.out.find("recall@100%P") != std::string::npos);
    CHECK(run("bench " + cfg.string() + " --out " + four.string() + " --workers 4").code == 0);
    CHECK(slurp(one / "results.csv") == slurp(four / "results.csv"));
    CHECK(slurp(one / "summary.json") == slurp(four / "summary.json"));
    const json summary = json::parse(slurp(one / "summary.json"));
    CHECK(summary["by_distance_fn"].size() == 2);

    const fs::path blocker = write("not_a_dir", "x");
    r = run("bench " + cfg.string() + " --out " + (blocker / "sub").string());
    CHECK(r.code == 1);
    CHECK_FALSE(r.err.empty());
    CHECK(run("bench " + write("broken.cfg", "trials = 2\n").string() + " --out " + one.string())
              .code == 1);
}
