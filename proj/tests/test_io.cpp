#include <gtest/gtest.h>

#include <filesystem>

#include "support.hpp"
#include "wignerkit/io.hpp"
#include "wignerkit/master_equation.hpp"

using namespace wignerkit;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "wignerkit_test_io";
    fs::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST(DensityJson, RoundTripIsExact) {
    const auto rho = testsupport::random_density(6, 9);
    const auto text = io::dump(io::to_json(rho));
    const auto back = io::density_from_json(io::parse_json(text, "rho"));
    ASSERT_EQ(back.size(), rho.size());
    EXPECT_TRUE((back.matrix().array() == rho.matrix().array()).all());
}

TEST(DensityJson, LayoutAndRealEntries) {
    const auto j = io::to_json(fock_state(1, FockDim(1)));
    EXPECT_EQ(j["n_max"], 1);
    EXPECT_EQ(j["rows"][1][1][0], 1.0);
    EXPECT_EQ(j["rows"][1][1][1], 0.0);
    const auto r = io::density_from_json(io::parse_json(R"({"n_max":1,"rows":[[0.5,0],[0,0.5]]})", "rho"));
    EXPECT_EQ(r(0, 0), cplx(0.5, 0.0));
}

TEST(DensityJson, Rejections) {
    auto load = [](const std::string& t) { return io::density_from_json(io::parse_json(t, "rho")); };
    EXPECT_THROW(load(R"({"n_max":1,"rows":[[1,0]]})"), ValidationError);
    EXPECT_THROW(load(R"({"n_max":1,"rows":[[1,0],[0]]})"), ValidationError);
    EXPECT_THROW(load(R"({"n_max":1,"rows":[[1,"x"],[0,0]]})"), ValidationError);
    EXPECT_THROW(load(R"({"rows":[]})"), ValidationError);
    // shape only; physical checks are separate
    EXPECT_FALSE(validate_density(load(R"({"n_max":1,"rows":[[2,0],[0,0]]})")).trace_ok);
    EXPECT_THROW(io::parse_json("{", "rho"), ValidationError);
}

TEST(FieldJson, RoundTripIsExact) {
    const auto grid = PhaseSpaceGrid(-3.0, 2.0, 11, -1.0, 4.0, 7);
    const auto f = field_on_grid(testsupport::random_density(4, 2), grid, -0.3);
    const auto back = io::field_from_json(io::parse_json(io::dump(io::to_json(f)), "field"));
    EXPECT_EQ(back.grid, f.grid);
    EXPECT_EQ(back.s, f.s);
    EXPECT_EQ(back.method, f.method);
    EXPECT_TRUE((back.values.array() == f.values.array()).all());
}

TEST(FieldJson, ShapeMismatchRejected) {
    auto j = io::to_json(field_on_grid(fock_state(0, FockDim(2)), PhaseSpaceGrid::square(-1.0, 1.0, 3), 0.0));
    j["values"].erase(0);
    EXPECT_THROW(io::field_from_json(j), ValidationError);
    j = io::to_json(field_on_grid(fock_state(0, FockDim(2)), PhaseSpaceGrid::square(-1.0, 1.0, 3), 0.0));
    j["grid"]["n_re"] = 1;
    EXPECT_THROW(io::field_from_json(j), ValidationError);
}

TEST(FieldCsv, HeaderAndRowOrder) {
    const auto f = field_on_grid(fock_state(0, FockDim(2)), PhaseSpaceGrid::square(-1.0, 1.0, 3), 0.0);
    const auto csv = io::field_csv(f);
    EXPECT_EQ(csv.substr(0, 6), "x,y,w\n");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 10);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    EXPECT_EQ(line.substr(0, 6), "-1,-1,");
    std::getline(in, line);
    EXPECT_EQ(line.substr(0, 5), "-1,0,");
    EXPECT_EQ(io::fmt(0.1), "0.10000000000000001");
}

TEST(MarginalCsv, Format) {
    Marginal m{{-1.0, 0.5}, {0.25, 0.75}};
    EXPECT_EQ(io::marginal_csv(m), "x,p\n-1,0.25\n0.5,0.75\n");
}

TEST(Reports, PositivityAndDiagnostics) {
    PositivityReport r;
    r.s_star = -0.25;
    r.min_curve = {{0.99, -1.0}, {-1.0, 0.1}};
    r.grid = PhaseSpaceGrid::square(-2.0, 2.0, 5);
    r.flags = {"x"};
    const auto j = io::to_json(r);
    EXPECT_EQ(j["s_star"], -0.25);
    EXPECT_EQ(j["min_curve"][1][0], -1.0);
    EXPECT_EQ(j["grid"]["n_im"], 5);
    EXPECT_EQ(j["flags"][0], "x");
    InversionDiagnostics d;
    d.warnings = {"w"};
    d.clipped = true;
    const auto k = io::to_json(d);
    EXPECT_EQ(k["clipped"], true);
    EXPECT_EQ(k["warnings"].size(), 1u);
}

TEST(FpSpecJson, DampedOscillatorSymbolicAndNumeric) {
    const auto meq = parse_master_equation(
        "-(g/2)*(N+1)*(ad*a*rho + rho*ad*a - 2*a*rho*ad) - (g/2)*N*(a*ad*rho + rho*a*ad - 2*ad*rho*a)");
    const auto fp = extract_fp(compile_generator(meq));
    const std::map<std::string, cplx> bind{{"g", 2.0}, {"N", 0.5}};
    const auto sym = io::to_json(fp, bind, "symbolic");
    EXPECT_EQ(sym["s"], "symbolic");
    EXPECT_TRUE(sym["trace_preserving"].get<bool>());
    EXPECT_TRUE(sym["residual_terms"].empty());
    EXPECT_FALSE(sym["numeric"]["diffusion"].contains("value"));  // s unbound
    EXPECT_TRUE(sym["numeric"]["drift_alpha"].contains("value"));
    EXPECT_THROW(io::ou_from_fp_json(sym), ValidationError);

    auto nb = bind;
    nb["s"] = -0.5;
    const auto num = io::to_json(fp, nb, "-0.5");
    const auto ou = io::ou_from_fp_json(io::parse_json(io::dump(num), "fp"));
    EXPECT_NEAR(ou.gamma, 2.0, 1e-15);
    EXPECT_NEAR(ou.nbar, 0.5, 1e-15);
    EXPECT_NEAR(ou.s, -0.5, 1e-15);
    EXPECT_NEAR(ou.omega, 0.0, 1e-15);
}

TEST(FpSpecJson, ResidualsRefused) {
    const auto meq = parse_master_equation("a*a*rho*ad*ad - ad*ad*a*a*rho");
    auto nb = std::map<std::string, cplx>{{"s", 0.0}};
    const auto j = io::to_json(extract_fp(compile_generator(meq)), nb, "0");
    EXPECT_FALSE(j["residual_terms"].empty());
    EXPECT_THROW(io::ou_from_fp_json(j), ValidationError);
}

TEST(Ensemble, CsvAndSidecarRoundTrip) {
    const OuParams p{1.0, 0.5, -0.25, 0.3};
    auto e = sample_initial(parse_initial_law("coherent:0.5,-1", -0.25), 257, -0.25, 42, 1);
    e = simulate(e, p, 0.05, 7, Scheme::ExactGaussian, 1);
    const auto path = scratch("ens.csv").string();
    io::write_ensemble(path, e, {{"note", "t"}});
    const auto back = io::read_ensemble(path);
    ASSERT_EQ(back.size(), e.size());
    for (std::size_t i = 0; i < e.size(); ++i) {
        EXPECT_EQ(back.samples[i], e.samples[i]);
        EXPECT_EQ(back.weights[i], e.weights[i]);
    }
    EXPECT_EQ(back.seed, 42u);
    EXPECT_EQ(back.steps_taken, 7u);
    EXPECT_EQ(back.scheme, "exact-gaussian-step");
    EXPECT_EQ(back.dt, 0.05);
    EXPECT_EQ(back.s, -0.25);
    EXPECT_NEAR(back.time, 0.35, 1e-15);
    const auto side = io::parse_json(io::read_text(path + ".json"), "sidecar");
    EXPECT_EQ(side["params"]["note"], "t");
    EXPECT_EQ(side["count"], 257);

    // resuming from the checkpoint continues the same random stream
    const auto whole = simulate(e, p, 0.05, 5, Scheme::ExactGaussian, 1);
    const auto resumed = simulate(back, p, 0.05, 5, Scheme::ExactGaussian, 1);
    for (std::size_t i = 0; i < e.size(); ++i) EXPECT_EQ(whole.samples[i], resumed.samples[i]);
}

TEST(Ensemble, PlainCsvWithoutSidecar) {
    const auto path = scratch("plain.csv").string();
    fs::remove(path + ".json");
    io::write_text(path, "x,y\n1,2\n3,4\r\n\n");
    const auto e = io::read_ensemble(path);
    ASSERT_EQ(e.size(), 2u);
    EXPECT_EQ(e.samples[1], cplx(3.0, 4.0));
    EXPECT_EQ(e.weights[0], 0.5);
    EXPECT_EQ(e.seed, 0u);

    io::write_text(path, "1,2,3\n1,2,1\n");
    const auto w = io::read_ensemble(path);
    EXPECT_EQ(w.weights[0], 0.75);
}

TEST(Ensemble, MalformedInputs) {
    const auto path = scratch("bad.csv").string();
    fs::remove(path + ".json");
    io::write_text(path, "x,y,weight\n1,oops,1\n");
    EXPECT_THROW(io::read_ensemble(path), ValidationError);
    io::write_text(path, "x,y,weight\n1,2,-1\n");
    EXPECT_THROW(io::read_ensemble(path), ValidationError);
    io::write_text(path, "x,y,weight\n1\n");
    EXPECT_THROW(io::read_ensemble(path), ValidationError);
    io::write_text(path, "x,y,weight\n");
    EXPECT_THROW(io::read_ensemble(path), ValidationError);
    EXPECT_THROW(io::read_ensemble(scratch("missing.csv").string()), ValidationError);
}
