#include <CLI11.hpp>
#include <boost/version.hpp>
#include <gmp.h>
#include <mpfr.h>

#include <cmath>
#include <iostream>

#include "wignerkit/wignerkit.hpp"

using namespace wignerkit;
using io::json;

namespace {

constexpr const char* kVersion = "0.1.0";

std::vector<std::string> g_argv;
int g_threads = 0;

json metadata(json extra = json::object()) {
    json m = {{"tool", "wignerkit"},
              {"version", kVersion},
              {"command", g_argv},
              {"deterministic", true},
              {"libraries",
               {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                              std::to_string(EIGEN_MINOR_VERSION)},
                {"mpfr", mpfr_get_version()},
                {"gmp", gmp_version},
                {"boost", BOOST_LIB_VERSION},
                {"cli11", CLI11_VERSION},
                {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                      std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                      std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}}};
    for (auto& [k, v] : extra.items()) m[k] = v;
    return m;
}

double parse_real(const std::string& text, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used == text.size() && std::isfinite(v)) return v;
    } catch (const std::exception&) {
    }
    throw ValidationError(what + ": malformed number '" + text + "'");
}

/// "re" or "re,im".
cplx parse_complex(const std::string& text, const std::string& what) {
    const auto comma = text.find(',');
    if (comma == std::string::npos) return {parse_real(text, what), 0.0};
    return {parse_real(text.substr(0, comma), what), parse_real(text.substr(comma + 1), what)};
}

/// `min:max:n[,min:max:n]`, square when one range is given.
PhaseSpaceGrid parse_grid(const std::string& spec) {
    auto range = [&](const std::string& r, double& lo, double& hi, int& n) {
        const auto c1 = r.find(':');
        const auto c2 = c1 == std::string::npos ? c1 : r.find(':', c1 + 1);
        if (c2 == std::string::npos) throw ValidationError("grid '" + spec + "': expected min:max:n");
        lo = parse_real(r.substr(0, c1), "grid");
        hi = parse_real(r.substr(c1 + 1, c2 - c1 - 1), "grid");
        const double nd = parse_real(r.substr(c2 + 1), "grid");
        if (nd != std::floor(nd) || nd < 2 || nd > 1e5) throw ValidationError("grid '" + spec + "': bad node count");
        n = static_cast<int>(nd);
    };
    PhaseSpaceGrid g;
    const auto comma = spec.find(',');
    range(spec.substr(0, comma), g.re_min, g.re_max, g.n_re);
    if (comma == std::string::npos) {
        g.im_min = g.re_min;
        g.im_max = g.re_max;
        g.n_im = g.n_re;
    } else {
        range(spec.substr(comma + 1), g.im_min, g.im_max, g.n_im);
    }
    g.validate();
    return g;
}

/// Exact value of a decimal literal such as -0.25 or 1e-3.
CRational parse_decimal(const std::string& text) {
    std::string t = text;
    bool neg = false;
    if (!t.empty() && (t[0] == '-' || t[0] == '+')) {
        neg = t[0] == '-';
        t = t.substr(1);
    }
    const auto e = t.find_first_of("eE");
    int exp10 = 0;
    if (e != std::string::npos) {
        exp10 = static_cast<int>(parse_real(t.substr(e + 1), "--s"));
        if (std::abs(exp10) > 400) throw ValidationError("--s: exponent too large");
        t = t.substr(0, e);
    }
    std::string digits;
    bool dot = false;
    for (char c : t) {
        if (c == '.' && !dot) {
            dot = true;
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            digits += c;
            if (dot) --exp10;
        } else {
            throw ValidationError("--s: expected a number or 'symbolic', got '" + text + "'");
        }
    }
    if (digits.empty()) throw ValidationError("--s: expected a number or 'symbolic', got '" + text + "'");
    const auto nz = digits.find_first_not_of('0');
    Rational v{boost::multiprecision::mpz_int(nz == std::string::npos ? "0" : digits.substr(nz))};
    for (int k = 0; k < std::abs(exp10); ++k) v = exp10 > 0 ? v * 10 : v / 10;
    return CRational(neg ? Rational(-v) : v);
}

DensityMatrix load_density(const std::string& path, json& warnings) {
    const DensityMatrix rho = io::density_from_json(io::parse_json(io::read_text(path), path));
    const auto d = validate_density(rho);
    if (!d.hermitian_ok) throw ValidationError(path + ": density matrix is not Hermitian");
    if (!d.trace_ok) throw ValidationError(path + ": density matrix trace differs from 1");
    if (!d.psd_ok) throw ValidationError(path + ": density matrix has a negative eigenvalue");
    if (!d.tail_ok) warnings.push_back("truncation tail mass " + io::fmt(d.tail_mass) + " exceeds tolerance");
    return rho;
}

WignerField load_field(const std::string& path) {
    return io::field_from_json(io::parse_json(io::read_text(path), path));
}

void write_json(const std::string& path, const json& j) { io::write_text(path, io::dump(j)); }

json density_output(const DensityMatrix& rho, json meta) {
    json j = io::to_json(rho);
    j["metadata"] = std::move(meta);
    return j;
}

// ---------------------------------------------------------------------------

struct StateArgs {
    std::string kind, out, beta = "0";
    int n = 0, dim = -1, sign = 1;
    double nbar = 0.0;
};

void run_state(const StateArgs& a) {
    const FockDim dim(a.dim);
    DensityMatrix rho;
    json params = {{"kind", a.kind}, {"n_max", a.dim}};
    if (a.kind == "vacuum") {
        rho = fock_state(0, dim);
    } else if (a.kind == "fock") {
        rho = fock_state(a.n, dim);
        params["n"] = a.n;
    } else if (a.kind == "coherent") {
        rho = coherent_state(parse_complex(a.beta, "--beta"), dim);
        params["beta"] = a.beta;
    } else if (a.kind == "thermal") {
        rho = thermal_state(a.nbar, dim);
        params["nbar"] = a.nbar;
    } else if (a.kind == "cat") {
        rho = cat_state(parse_complex(a.beta, "--beta"), a.sign, dim);
        params["beta"] = a.beta;
        params["sign"] = a.sign;
    } else {
        throw ValidationError("unknown state kind '" + a.kind + "' (vacuum, fock, coherent, thermal, cat)");
    }
    write_json(a.out, density_output(rho, metadata({{"state", params}})));
}

struct WignerArgs {
    std::string rho, grid, method = "auto", out, csv;
    double s = 0.0, s_cap = kDefaultSCap;
};

void run_wigner(const WignerArgs& a) {
    json warnings = json::array();
    const auto rho = load_density(a.rho, warnings);
    FieldOptions opt;
    opt.s_cap = a.s_cap;
    opt.threads = g_threads;
    const auto f = field_on_grid(rho, parse_grid(a.grid), a.s, parse_method(a.method), opt);
    json j = io::to_json(f);
    j["metadata"] = metadata({{"method_requested", a.method},
                              {"method_used", f.method},
                              {"s_cap", a.s_cap},
                              {"imag_residue", f.imag_residue},
                              {"warnings", warnings}});
    write_json(a.out, j);
    if (!a.csv.empty()) io::write_text(a.csv, io::field_csv(f));
}

struct InvertArgs {
    std::string field, out, report;
    int dim = -1;
    bool clip = false;
    double s_cap = kDefaultSCap, max_trace_defect = 0.05;
};

void run_invert(const InvertArgs& a) {
    InversionOptions opt;
    opt.clip_eigenvalues = a.clip;
    opt.s_cap = a.s_cap;
    opt.max_trace_defect = a.max_trace_defect;
    opt.threads = g_threads;
    const auto res = rho_from_field(load_field(a.field), FockDim(a.dim), opt);
    const json meta = metadata({{"clip_eigenvalues", a.clip}, {"max_trace_defect", a.max_trace_defect}});
    write_json(a.out, density_output(res.rho, meta));
    if (!a.report.empty()) {
        json r = io::to_json(res.diagnostics);
        r["metadata"] = meta;
        write_json(a.report, r);
    }
}

struct PositivityArgs {
    std::string rho, grid, out;
    std::vector<double> scan{-1.0, kDefaultSCap};
    double tol_s = 1e-3, eps = 1e-9;
};

void run_positivity(const PositivityArgs& a) {
    json warnings = json::array();
    const auto rho = load_density(a.rho, warnings);
    PositivityOptions opt;
    opt.s_lo = a.scan[0];
    opt.s_hi = a.scan[1];
    opt.tol_s = a.tol_s;
    opt.eps_pos = a.eps;
    opt.threads = g_threads;
    const auto rep = max_positive_s(rho, parse_grid(a.grid), opt);
    json j = io::to_json(rep);
    j["metadata"] =
        metadata({{"tol_s", a.tol_s}, {"eps_pos", a.eps}, {"method", "auto"}, {"warnings", warnings}});
    write_json(a.out, j);
}

struct CompileArgs {
    std::string master, s = "symbolic", out;
    std::vector<std::string> bind;
};

void run_compile(const CompileArgs& a) {
    const auto meq = parse_master_equation(io::read_text(a.master));
    std::map<std::string, cplx> bindings;
    for (const auto& b : a.bind) {
        const auto eq = b.find('=');
        if (eq == std::string::npos || eq == 0) throw ValidationError("--bind: expected name=value, got '" + b + "'");
        const std::string name = b.substr(0, eq);
        if (name == "s") throw ValidationError("--bind: use --s for the ordering parameter");
        if (!meq.parameters.count(name))
            throw ValidationError("--bind: '" + name + "' is not a parameter of the master equation");
        bindings[name] = parse_complex(b.substr(eq + 1), "--bind " + name);
    }
    Poly s_poly = Poly::var("s");
    if (a.s != "symbolic") {
        s_poly = Poly(parse_decimal(a.s));
        bindings["s"] = parse_real(a.s, "--s");
    }
    const DiffForm form = compile_generator(meq, s_poly);
    json j = io::to_json(extract_fp(form), bindings, a.s);
    j["generator"] = form.str();
    j["parameters"] = meq.parameters;
    j["metadata"] = metadata();
    write_json(a.out, j);
}

struct SimulateArgs {
    std::string fp, init, resume, scheme = "exact-gaussian-step", out;
    double t = 0.0, dt = 0.0;
    std::size_t n = 0;
    std::uint64_t seed = 0;
};

void run_simulate(const SimulateArgs& a) {
    const OuParams ou = io::ou_from_fp_json(io::parse_json(io::read_text(a.fp), a.fp));
    require(a.dt > 0.0, "simulate: --dt must be positive");
    require(a.t >= 0.0, "simulate: --t must be non-negative");
    const double steps_real = std::round(a.t / a.dt);
    if (std::abs(steps_real * a.dt - a.t) > 1e-9 * std::max(1.0, a.t))
        throw ValidationError("simulate: --t must be a whole number of --dt steps");
    const Scheme scheme = parse_scheme(a.scheme);
    TrajectoryEnsemble e;
    if (!a.resume.empty()) {
        e = io::read_ensemble(a.resume);
        if (e.s != ou.s) throw ValidationError("simulate: checkpoint s differs from the Fokker-Planck spec's s");
    } else {
        require(a.n >= 1, "simulate: --n must be at least 1");
        e = sample_initial(parse_initial_law(a.init, ou.s), a.n, ou.s, a.seed, g_threads);
    }
    e = simulate(e, ou, a.dt, static_cast<std::uint64_t>(steps_real), scheme, g_threads);
    const json params = {{"gamma", ou.gamma},
                         {"nbar", ou.nbar},
                         {"s", ou.s},
                         {"omega", ou.omega},
                         {"init", a.resume.empty() ? a.init : "resume:" + a.resume},
                         {"t", a.t},
                         {"fp", a.fp}};
    io::write_text(a.out, io::ensemble_csv(e));
    json side = io::ensemble_sidecar(e, params);
    side["metadata"] = metadata({{"seed", e.seed}, {"scheme", e.scheme}});
    write_json(a.out + ".json", side);
}

struct ReconstructArgs {
    std::string ensemble, out, report;
    double s = 0.0;
    int dim = -1;
};

void run_reconstruct(const ReconstructArgs& a) {
    const auto e = io::read_ensemble(a.ensemble);
    InversionOptions opt;
    opt.threads = g_threads;
    const auto res = reconstruct(e, a.s, FockDim(a.dim), opt);
    const json meta = metadata({{"samples", e.size()}, {"seed", e.seed}, {"s", a.s}});
    write_json(a.out, density_output(res.rho, meta));
    if (!a.report.empty()) {
        const auto n = estimate_expectation(e.as_samples(), a.s, FockDim(a.dim), number_operator(FockDim(a.dim)).matrix());
        json se = json::array();
        for (int r = 0; r < res.stderr_entries.rows(); ++r) {
            json row = json::array();
            for (int c = 0; c < res.stderr_entries.cols(); ++c) row.push_back(res.stderr_entries(r, c));
            se.push_back(std::move(row));
        }
        json rep = io::to_json(res.diagnostics);
        rep["stderr"] = std::move(se);
        rep["mean_photon_number"] = {{"mean", n.mean}, {"stderr", n.stderr_value}};
        rep["metadata"] = meta;
        write_json(a.report, rep);
    }
}

struct MarginalArgs {
    std::string field, out;
    double phi = 0.0;
    int stencil = 8;
};

void run_marginal(const MarginalArgs& a) {
    const auto m = marginal(load_field(a.field), a.phi, a.stencil);
    io::write_text(a.out, io::marginal_csv(m));
    write_json(a.out + ".json", metadata({{"phi", a.phi}, {"stencil", a.stencil}}));
}

void fail(const char* kind, const std::string& msg, int code, const ParseError* pe = nullptr) {
    json j = {{"error", kind}, {"message", msg}, {"exit_code", code}};
    if (pe) {
        j["line"] = pe->line();
        j["column"] = pe->column();
    }
    std::cerr << j.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
    g_argv.assign(argv, argv + argc);
    CLI::App app{"Phase-space quasi-probability toolkit"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    app.add_option("--threads", g_threads, "Worker threads (default: WIGNERKIT_THREADS, then all cores)")
        ->check(CLI::NonNegativeNumber);

    StateArgs st;
    auto* state = app.add_subcommand("state", "Fixture states");
    state->require_subcommand(1);
    auto* make = state->add_subcommand("make", "Write a fixture density matrix");
    make->add_option("kind", st.kind, "vacuum, fock, coherent, thermal or cat")->required();
    make->add_option("--n", st.n, "Photon number (fock)");
    make->add_option("--beta", st.beta, "Amplitude re[,im] (coherent, cat)");
    make->add_option("--nbar", st.nbar, "Mean occupation (thermal)");
    make->add_option("--sign", st.sign, "+1 even, -1 odd (cat)");
    make->add_option("--dim", st.dim, "Truncation n_max")->required();
    make->add_option("-o,--out", st.out)->required();

    WignerArgs wa;
    auto* wig = app.add_subcommand("wigner", "Evaluate W_s on a grid");
    wig->add_option("--rho", wa.rho)->required();
    wig->add_option("--s", wa.s)->required();
    wig->add_option("--grid", wa.grid, "min:max:n[,min:max:n]")->required();
    wig->add_option("--method", wa.method, "auto, w1, w2, w3 or char");
    wig->add_option("--s-cap", wa.s_cap);
    wig->add_option("-o,--out", wa.out)->required();
    wig->add_option("--csv", wa.csv);

    InvertArgs ia;
    auto* inv = app.add_subcommand("invert", "Density matrix from a field");
    inv->add_option("--field", ia.field)->required();
    inv->add_option("--dim", ia.dim, "Reconstruction n_max")->required();
    inv->add_option("-o,--out", ia.out)->required();
    inv->add_option("--report", ia.report);
    inv->add_flag("--clip", ia.clip, "Clip negative eigenvalues");
    inv->add_option("--s-cap", ia.s_cap);
    inv->add_option("--max-trace-defect", ia.max_trace_defect);

    PositivityArgs pa;
    auto* pos = app.add_subcommand("positivity", "Largest s with a non-negative field");
    pos->add_option("--rho", pa.rho)->required();
    pos->add_option("--grid", pa.grid)->required();
    pos->add_option("--scan", pa.scan, "s_lo s_hi")->expected(2);
    pos->add_option("--tol-s", pa.tol_s);
    pos->add_option("--eps", pa.eps);
    pos->add_option("-o,--out", pa.out)->required();

    CompileArgs ca;
    auto* comp = app.add_subcommand("compile", "Master equation to Fokker-Planck form");
    comp->add_option("--master", ca.master)->required();
    comp->add_option("--bind", ca.bind, "name=value ...");
    comp->add_option("--s", ca.s, "Ordering value or 'symbolic'");
    comp->add_option("-o,--out", ca.out)->required();

    SimulateArgs sa;
    auto* sim = app.add_subcommand("simulate", "Stochastic trajectories of the compiled process");
    sim->add_option("--fp", sa.fp)->required();
    auto* init_opt = sim->add_option("--init", sa.init, "delta:x,y | coherent:x,y | vacuum | thermal:n");
    auto* resume_opt = sim->add_option("--resume", sa.resume, "Continue from an ensemble checkpoint");
    init_opt->excludes(resume_opt);
    sim->add_option("--t", sa.t)->required();
    sim->add_option("--dt", sa.dt)->required();
    sim->add_option("--n", sa.n)->excludes(resume_opt);
    sim->add_option("--seed", sa.seed)->excludes(resume_opt);
    sim->add_option("--scheme", sa.scheme, "exact-gaussian-step or euler-maruyama");
    sim->add_option("-o,--out", sa.out)->required();

    ReconstructArgs ra;
    auto* rec = app.add_subcommand("reconstruct", "Density matrix from an ensemble");
    rec->add_option("--ensemble", ra.ensemble)->required();
    rec->add_option("--s", ra.s)->required();
    rec->add_option("--dim", ra.dim)->required();
    rec->add_option("-o,--out", ra.out)->required();
    rec->add_option("--report", ra.report);

    MarginalArgs ma;
    auto* marg = app.add_subcommand("marginal", "Quadrature distribution of an s = 0 field");
    marg->add_option("--field", ma.field)->required();
    marg->add_option("--phi", ma.phi)->required();
    marg->add_option("--stencil", ma.stencil);
    marg->add_option("-o,--out", ma.out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        fail("usage", e.what(), 2);
        return 2;
    }

    try {
        if (*make) {
            run_state(st);
        } else if (*wig) {
            run_wigner(wa);
        } else if (*inv) {
            run_invert(ia);
        } else if (*pos) {
            run_positivity(pa);
        } else if (*comp) {
            run_compile(ca);
        } else if (*sim) {
            if (sa.init.empty() && sa.resume.empty()) {
                fail("usage", "simulate: one of --init or --resume is required", 2);
                return 2;
            }
            run_simulate(sa);
        } else if (*rec) {
            run_reconstruct(ra);
        } else if (*marg) {
            run_marginal(ma);
        }
    } catch (const ParseError& e) {
        fail("validation", e.what(), 3, &e);
        return 3;
    } catch (const ValidationError& e) {
        fail("validation", e.what(), 3);
        return 3;
    } catch (const NumericalError& e) {
        fail("numerical", e.what(), 4);
        return 4;
    } catch (const std::exception& e) {
        fail("numerical", e.what(), 4);
        return 4;
    }
    return 0;
}
