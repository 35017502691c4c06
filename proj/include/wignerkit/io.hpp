#pragma once

// File formats: density matrices, fields, Fokker-Planck specs and trajectory
// ensembles as JSON / CSV.

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "wignerkit/diffform.hpp"
#include "wignerkit/errors.hpp"
#include "wignerkit/fock.hpp"
#include "wignerkit/fpsim.hpp"
#include "wignerkit/grid.hpp"
#include "wignerkit/inversion.hpp"
#include "wignerkit/positivity.hpp"
#include "wignerkit/wigner.hpp"

namespace wignerkit::io {

using nlohmann::json;

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    out << text;
    if (!out) throw ValidationError("write failed for '" + path + "'");
}

inline json parse_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(what + ": invalid JSON (" + e.what() + ")");
    }
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

/// %.17g, for CSV.
inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// DensityMatrix

inline json to_json(const DensityMatrix& rho) {
    json rows = json::array();
    for (int r = 0; r < rho.size(); ++r) {
        json row = json::array();
        for (int c = 0; c < rho.size(); ++c) row.push_back({rho(r, c).real(), rho(r, c).imag()});
        rows.push_back(std::move(row));
    }
    return {{"n_max", rho.dim().n_max}, {"rows", std::move(rows)}};
}

inline DensityMatrix density_from_json(const json& j) {
    try {
        const int n_max = j.at("n_max").get<int>();
        const FockDim dim(n_max);
        const json& rows = j.at("rows");
        if (!rows.is_array() || static_cast<int>(rows.size()) != dim.size())
            throw ValidationError("density matrix JSON: expected " + std::to_string(dim.size()) + " rows");
        CMatrix m(dim.size(), dim.size());
        for (int r = 0; r < dim.size(); ++r) {
            const json& row = rows[static_cast<std::size_t>(r)];
            if (!row.is_array() || static_cast<int>(row.size()) != dim.size())
                throw ValidationError("density matrix JSON: row " + std::to_string(r) + " has wrong length");
            for (int c = 0; c < dim.size(); ++c) {
                const json& e = row[static_cast<std::size_t>(c)];
                if (e.is_number())
                    m(r, c) = {e.get<double>(), 0.0};
                else if (e.is_array() && e.size() == 2)
                    m(r, c) = {e[0].get<double>(), e[1].get<double>()};
                else
                    throw ValidationError("density matrix JSON: entries must be [re, im]");
            }
        }
        return DensityMatrix(dim, m);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("density matrix JSON: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// WignerField

inline json to_json(const PhaseSpaceGrid& g) {
    return {{"re_min", g.re_min}, {"re_max", g.re_max}, {"im_min", g.im_min},
            {"im_max", g.im_max}, {"n_re", g.n_re},     {"n_im", g.n_im}};
}

inline PhaseSpaceGrid grid_from_json(const json& j) {
    try {
        PhaseSpaceGrid g;
        g.re_min = j.at("re_min").get<double>();
        g.re_max = j.at("re_max").get<double>();
        g.im_min = j.at("im_min").get<double>();
        g.im_max = j.at("im_max").get<double>();
        g.n_re = j.at("n_re").get<int>();
        g.n_im = j.at("n_im").get<int>();
        g.validate();
        return g;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("grid JSON: ") + e.what());
    }
}

inline json to_json(const WignerField& f) {
    json values = json::array();
    for (int i = 0; i < f.grid.n_re; ++i) {
        json row = json::array();
        for (int j = 0; j < f.grid.n_im; ++j) row.push_back(f.values(i, j));
        values.push_back(std::move(row));
    }
    return {{"s", f.s}, {"grid", to_json(f.grid)}, {"values", std::move(values)}, {"method", f.method}};
}

inline WignerField field_from_json(const json& j) {
    try {
        WignerField f;
        f.s = j.at("s").get<double>();
        f.grid = grid_from_json(j.at("grid"));
        f.method = j.value("method", std::string("unknown"));
        const json& v = j.at("values");
        if (!v.is_array() || static_cast<int>(v.size()) != f.grid.n_re)
            throw ValidationError("field JSON: values must have n_re rows");
        f.values.resize(f.grid.n_re, f.grid.n_im);
        for (int i = 0; i < f.grid.n_re; ++i) {
            const json& row = v[static_cast<std::size_t>(i)];
            if (!row.is_array() || static_cast<int>(row.size()) != f.grid.n_im)
                throw ValidationError("field JSON: each row must have n_im values");
            for (int k = 0; k < f.grid.n_im; ++k) f.values(i, k) = row[static_cast<std::size_t>(k)].get<double>();
        }
        return f;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("field JSON: ") + e.what());
    }
}

inline std::string field_csv(const WignerField& f) {
    std::string out = "x,y,w\n";
    for (int i = 0; i < f.grid.n_re; ++i)
        for (int j = 0; j < f.grid.n_im; ++j)
            out += fmt(f.grid.x(i)) + "," + fmt(f.grid.y(j)) + "," + fmt(f.values(i, j)) + "\n";
    return out;
}

inline std::string marginal_csv(const Marginal& m) {
    std::string out = "x,p\n";
    for (std::size_t i = 0; i < m.x.size(); ++i) out += fmt(m.x[i]) + "," + fmt(m.p[i]) + "\n";
    return out;
}

inline json to_json(const InversionDiagnostics& d) {
    return {{"hermiticity_defect", d.hermiticity_defect},
            {"trace_defect", d.trace_defect},
            {"max_kernel", d.max_kernel},
            {"min_eigenvalue", d.min_eigenvalue},
            {"clipped", d.clipped},
            {"warnings", d.warnings}};
}

inline json to_json(const PositivityReport& r) {
    json curve = json::array();
    for (const auto& [s, m] : r.min_curve) curve.push_back({s, m});
    return {{"s_star", r.s_star}, {"min_curve", std::move(curve)}, {"grid", to_json(r.grid)}, {"flags", r.flags}};
}

// ---------------------------------------------------------------------------
// Fokker-Planck spec

inline std::string key_name(const FormKey& k) {
    return "d_a^" + std::to_string(k[2]) + " d_ac^" + std::to_string(k[3]) + " a^" + std::to_string(k[0]) +
           " ac^" + std::to_string(k[1]);
}

inline json term_list(const std::vector<std::pair<FormKey, Poly>>& terms) {
    json out = json::array();
    for (const auto& [k, c] : terms) {
        json t = {{"exponents", {{"a", k[0]}, {"ac", k[1]}, {"d_a", k[2]}, {"d_ac", k[3]}}},
                  {"term", key_name(k)},
                  {"coefficient", c.str()}};
        out.push_back(std::move(t));
    }
    return out;
}

/// Coefficient strings, plus numeric values when every variable is bound.
inline json to_json(const FpSpec& fp, const std::map<std::string, cplx>& bindings, const std::string& s_label) {
    auto coeff = [&](const Poly& p) {
        json j = {{"expr", p.str()}};
        try {
            const cplx v = p.evaluate(bindings);
            j["value"] = {v.real(), v.imag()};
        } catch (const ValidationError&) {
        }
        return j;
    };
    json j;
    j["drift_alpha"] = fp.drift_alpha.str();
    j["drift_conj"] = fp.drift_conj.str();
    j["diffusion"] = fp.diffusion.str();
    j["residual_terms"] = term_list(fp.residual_terms);
    j["other_terms"] = term_list(fp.other_terms);
    j["zero_order_terms"] = term_list(fp.zero_order_terms);
    j["trace_preserving"] = fp.trace_preserving();
    j["s"] = s_label;
    j["numeric"] = {{"drift_alpha", coeff(fp.drift_alpha)},
                    {"drift_conj", coeff(fp.drift_conj)},
                    {"diffusion", coeff(fp.diffusion)}};
    json b = json::object();
    for (const auto& [k, v] : bindings) b[k] = v.imag() == 0.0 ? json(v.real()) : json({v.real(), v.imag()});
    j["bindings"] = b;
    return j;
}

/// OU parameters from a compiled spec file; requires numeric coefficients.
inline OuParams ou_from_fp_json(const json& j) {
    try {
        const json& num = j.at("numeric");
        auto val = [&](const char* name) {
            const json& c = num.at(name);
            if (!c.contains("value"))
                throw ValidationError(std::string("FpSpec JSON: coefficient '") + name +
                                      "' is symbolic; compile with numeric --s and --bind values");
            return cplx(c["value"][0].get<double>(), c["value"][1].get<double>());
        };
        FpSpec fp;
        const cplx ka = val("drift_alpha"), kc = val("drift_conj"), dc = val("diffusion");
        auto constant = [](cplx v) {
            return Poly(CRational(Rational(v.real()), Rational(v.imag())));
        };
        fp.drift_alpha = constant(ka);
        fp.drift_conj = constant(kc);
        fp.diffusion = constant(dc);
        auto reject = [&](const char* name, const char* why) {
            if (j.contains(name) && !j.at(name).empty()) throw ValidationError(std::string("realize_sde: ") + why);
        };
        reject("residual_terms", "derivative terms of order > 2 cannot be simulated");
        reject("other_terms", "drift/diffusion terms outside the linear-drift form");
        reject("zero_order_terms", "generator is not trace preserving");
        const json& b = j.at("bindings");
        if (!b.contains("s")) throw ValidationError("FpSpec JSON: compile with a numeric --s to simulate");
        std::map<std::string, cplx> bind;
        bind["s"] = b.at("s").get<double>();
        return realize_sde(fp, bind);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("FpSpec JSON: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Trajectory ensembles: CSV x,y,weight plus a JSON sidecar

inline json ensemble_sidecar(const TrajectoryEnsemble& e, const json& params) {
    return {{"seed", e.seed}, {"scheme", e.scheme}, {"dt", e.dt},         {"steps", e.steps_taken},
            {"time", e.time}, {"s", e.s},           {"count", e.size()}, {"params", params}};
}

inline std::string ensemble_csv(const TrajectoryEnsemble& e) {
    std::string out = "x,y,weight\n";
    out.reserve(e.size() * 64);
    for (std::size_t i = 0; i < e.size(); ++i)
        out += fmt(e.samples[i].real()) + "," + fmt(e.samples[i].imag()) + "," + fmt(e.weights[i]) + "\n";
    return out;
}

inline void write_ensemble(const std::string& csv_path, const TrajectoryEnsemble& e, const json& params) {
    write_text(csv_path, ensemble_csv(e));
    write_text(csv_path + ".json", dump(ensemble_sidecar(e, params)));
}

/// Loads `x,y,weight` rows (weight column optional); metadata from the
/// sidecar when present. Weights are renormalized to sum to 1.
inline TrajectoryEnsemble read_ensemble(const std::string& csv_path) {
    TrajectoryEnsemble e;
    std::istringstream in(read_text(csv_path));
    std::string line;
    int line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!header_seen) {
            header_seen = true;
            if (line.rfind("x,y", 0) == 0) continue;
        }
        std::vector<double> v;
        std::stringstream ls(line);
        std::string tok;
        while (std::getline(ls, tok, ',')) {
            try {
                std::size_t used = 0;
                v.push_back(std::stod(tok, &used));
            } catch (const std::exception&) {
                throw ValidationError(csv_path + ":" + std::to_string(line_no) + ": malformed number");
            }
        }
        if (v.size() < 2 || v.size() > 3)
            throw ValidationError(csv_path + ":" + std::to_string(line_no) + ": expected x,y[,weight]");
        e.samples.emplace_back(v[0], v[1]);
        const double w = v.size() == 3 ? v[2] : 1.0;
        if (!(w >= 0.0)) throw ValidationError(csv_path + ":" + std::to_string(line_no) + ": negative weight");
        e.weights.push_back(w);
    }
    if (e.samples.empty()) throw ValidationError("ensemble '" + csv_path + "' is empty");
    NeumaierSum tot;
    for (double w : e.weights) tot.add(w);
    if (!(tot.value() > 0.0)) throw ValidationError("ensemble weights sum to zero");
    if (std::abs(tot.value() - 1.0) > 1e-12)
        for (double& w : e.weights) w /= tot.value();
    std::ifstream side(csv_path + ".json");
    if (side) {
        const json j = parse_json(read_text(csv_path + ".json"), "ensemble sidecar");
        e.seed = j.value("seed", std::uint64_t{0});
        e.scheme = j.value("scheme", std::string("none"));
        e.dt = j.value("dt", 0.0);
        e.steps_taken = j.value("steps", std::uint64_t{0});
        e.time = j.value("time", 0.0);
        e.s = j.value("s", 0.0);
    }
    return e;
}

}  // namespace wignerkit::io
