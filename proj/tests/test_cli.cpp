#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#ifndef LYOCERT_BINARY
#define LYOCERT_BINARY "lyocert"
#endif
#ifndef LYOCERT_CONFIG_DIR
#define LYOCERT_CONFIG_DIR "configs"
#endif

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string config(const std::string& name) {
    return std::string(LYOCERT_CONFIG_DIR) + "/" + name + ".json";
}

int run(const std::string& args) {
    std::string cmd = std::string(LYOCERT_BINARY) + " " + args + " > /dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

json run_json(const std::string& args, const std::string& out) {
    std::string cmd = std::string(LYOCERT_BINARY) + " " + args + " --out " + out + " 2>/dev/null";
    int rc = std::system(cmd.c_str());
    (void)rc;  // the JSON report carries the exit code
    std::ifstream in(out);
    REQUIRE(in.good());
    return json::parse(in);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

TEST_CASE("axioms: exit codes per system") {
    CHECK(run("axioms " + config("scalar_stable") + " --deterministic") == 0);
    CHECK(run("axioms " + config("broken_cocycle_demo") + " --deterministic") == 1);
    CHECK(run("axioms /does/not/exist.json") == 2);
}

TEST_CASE("axioms: broken flow names the cocycle witness") {
    auto report = run_json("axioms " + config("broken_cocycle_demo") + " --deterministic",
                           "/tmp/lyocert_axioms.json");
    CHECK(report["axioms"]["cocycle"]["status"] == "Refuted");
    CHECK(report["axioms"]["cocycle"]["witness"].contains("t"));
}

TEST_CASE("certify: exit codes") {
    CHECK(run("certify " + config("scalar_stable") +
              " --property UGAS --beta 1,1,1 --deterministic") == 0);
    CHECK(run("certify " + config("scalar_unstable") + " --property UGWA --deterministic") == 1);
    CHECK(run("certify " + config("scalar_stable") + " --property NOT_A_PROPERTY") == 2);
}

TEST_CASE("certify: report carries a replayable witness") {
    auto report = run_json(
        "certify " + config("scalar_unstable") + " --property UGWA --deterministic",
        "/tmp/lyocert_ugwa.json");
    CHECK(report["exit_code"] == 1);
    CHECK(report["evidence"]["witness"].contains("x"));
    CHECK(report["evidence"]["witness"].contains("d"));
}

TEST_CASE("lyap: construct and verify") {
    auto report = run_json("lyap " + config("scalar_stable") + " --construct --deterministic",
                           "/tmp/lyocert_lyap.json");
    CHECK(report["exit_code"] == 0);
    double v2 = -1;
    for (const auto& row : report["values"])
        if (row["x"][0].get<double>() == 2.0) v2 = row["value"].get<double>();
    CHECK(std::abs(v2 - 1.6931471805599453) <= 1e-3);

    // a Kinf rho violates the construction hypothesis: usage error
    CHECK(run("lyap " + config("scalar_stable") + " --construct --rho Kinf:r") == 2);

    // verify a hand-written candidate
    std::ofstream vf("/tmp/lyocert_v.json");
    vf << R"json({"kind":"expression","expression":"abs(x1)"})json";
    vf.close();
    CHECK(run("lyap " + config("scalar_stable") +
              " --verify /tmp/lyocert_v.json --alpha K:r --psi2 Kinf:r --deterministic") == 0);
    CHECK(run("lyap " + config("scalar_unstable") +
              " --verify /tmp/lyocert_v.json --alpha K:r --psi2 Kinf:r --deterministic") == 1);
}

TEST_CASE("klfit: sampled decaying envelope passes the KL invariants") {
    std::ofstream csv("/tmp/lyocert_psi.csv");
    csv << "r,t,value\n";
    for (int i = 0; i <= 16; ++i)
        for (int j = 0; j <= 12; ++j) {
            double r = 0.25 * i, t = 0.5 * j;
            csv << r << "," << t << "," << r * std::exp(-t) << "\n";
        }
    csv.close();
    auto report = run_json("klfit --psi /tmp/lyocert_psi.csv --deterministic",
                           "/tmp/lyocert_beta.json");
    CHECK(report["exit_code"] == 0);
    CHECK(report["kl_invariants"]["status"] == "Supported");
    CHECK(report["majorization_margin"].get<double>() >= 0.0);
    CHECK(report["beta"]["kind"] == "mesh_interpolant");
}

TEST_CASE("klfit: from sampled decay of the stable catalogue flow") {
    auto report = run_json("klfit --from-decay " + config("scalar_stable") +
                               " --n-max 4 --deterministic",
                           "/tmp/lyocert_beta2.json");
    CHECK(report["exit_code"] == 0);
    CHECK(report["kl_invariants"]["status"] == "Supported");
}

TEST_CASE("infer: closure and DOT export") {
    auto report = run_json("infer --assume NCLF --deterministic", "/tmp/lyocert_infer.json");
    auto closure = report["closure"]["closure"].get<std::vector<std::string>>();
    CHECK(std::find(closure.begin(), closure.end(), "iUGAS") != closure.end());

    CHECK(run("infer --assume NCLF --dot /tmp/lyocert_lattice.dot --deterministic") == 0);
    std::string dot = slurp("/tmp/lyocert_lattice.dot");
    for (const char* name : {"UGAS", "UGATT", "UGWA", "ULS", "UAS", "REP", "RFC", "UltULS",
                             "iUGAS", "iUGS", "iUGATT", "iULS", "iREP", "iRFC", "UltiULS",
                             "NCLF", "CLF"})
        CHECK(dot.find(std::string("  ") + name + ";") != std::string::npos);

    CHECK(run("infer --assume NOT_A_PROPERTY") == 2);
}

TEST_CASE("infer: certificates directory feeds the consistency check") {
    fs::create_directories("/tmp/lyocert_certs");
    {
        std::ofstream a("/tmp/lyocert_certs/iugs.json");
        a << R"({"property":"iUGS","evidence":{"status":"Supported","check":"iUGS"}})";
        std::ofstream b("/tmp/lyocert_certs/ugwa.json");
        b << R"({"property":"UGWA","evidence":{"status":"Refuted","check":"UGWA",)"
          << R"("witness":{"x":[1.0]}}})";
    }
    auto report = run_json("infer --certs /tmp/lyocert_certs --deterministic",
                           "/tmp/lyocert_infer2.json");
    CHECK(report["exit_code"] == 1);
    REQUIRE(report["contradictions"].size() == 1);
    CHECK(report["contradictions"][0]["property"] == "UGWA");
}

TEST_CASE("certify: plan files may carry weights and grids") {
    std::ofstream plan("/tmp/lyocert_plan.json");
    plan << R"json({
      "radii": [0.5, 1.0],
      "horizon": 30.0,
      "ensemble": {"seed": 0, "random_count": 4},
      "weights": {
        "alpha": {"kind": "expression", "source": "r", "class": "K"},
        "psi": {"kind": "expression", "source": "r", "class": "Kinf"}
      }
    })json";
    plan.close();
    auto report = run_json("certify " + config("scalar_stable") +
                               " --property iUGS --plan /tmp/lyocert_plan.json --deterministic",
                           "/tmp/lyocert_iugs.json");
    CHECK(report["exit_code"] == 0);
    CHECK(report["evidence"]["status"] == "Supported");
    CHECK(report["evidence"]["parameters"]["plan"]["horizon"] == 30.0);
}

TEST_CASE("certify: tail-norm property surface") {
    CHECK(run("certify " + config("scalar_stable") +
              " --property UGATT_tailnorm --alpha K:r --deterministic") == 0);
    CHECK(run("certify " + config("scalar_unstable") +
              " --property UGATT_tailnorm --alpha \"PositiveDefinite:r/(1+r^2)\" "
              "--deterministic") == 1);
}

TEST_CASE("determinism: identical runs produce byte-identical reports") {
    auto a = run_json("certify " + config("bilinear") + " --property REP --deterministic",
                      "/tmp/lyocert_det_a.json");
    auto b = run_json("certify " + config("bilinear") + " --property REP --deterministic",
                      "/tmp/lyocert_det_b.json");
    CHECK(slurp("/tmp/lyocert_det_a.json") == slurp("/tmp/lyocert_det_b.json"));
    CHECK(a == b);
}
