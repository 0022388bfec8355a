#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "lsavg/error.hpp"

namespace lsavg {

struct StageStatus {
    std::string name;
    std::string status;  // ok, failed, skipped
    std::string message;
    bool operator==(const StageStatus&) const = default;
};

struct AveragedSample {
    std::vector<double> z;
    std::vector<std::vector<double>> g;  // g[i], i = 1..k
    std::vector<double> error;
    bool operator==(const AveragedSample&) const = default;
};

struct ReductionSample {
    std::vector<double> alpha;
    std::vector<std::vector<double>> f;
    double det_delta = 0.0;
    bool operator==(const ReductionSample&) const = default;
};

struct ReductionSection {
    std::string level;  // base or nested
    int order = 0;
    int shift = 0;
    int r = 0;
    std::vector<int> zero;
    std::vector<double> max_abs;
    double min_abs_det_delta = 0.0;
    std::vector<ReductionSample> samples;
    bool operator==(const ReductionSection&) const = default;
};

struct BranchRow {
    double eps = 0.0;
    bool found = false;
    std::vector<double> a, z;
    double residual = 0.0;
    double scale = 0.0;
    double det_delta = 0.0;
    std::string message;
    bool operator==(const BranchRow&) const = default;
};

struct HypothesisSection {
    bool present = false;
    double min_abs_det_delta = 0.0;
    bool det_ok = false;
    int r = 0, k = 0, l = 0;
    double l_fit = 0.0, l_deviation = 0.0, P0 = 0.0;
    bool l_reliable = false, l_condition = false, simple_root_path = false;
    int pi_error_order = 0, perp_error_order = 0;
    bool operator==(const HypothesisSection&) const = default;
};

struct OrbitRow {
    double eps = 0.0;
    bool converged = false;
    std::vector<double> z;
    double residual = 0.0;
    int iterations = 0;
    std::vector<double> eig_re, eig_im;
    std::string classification;
    double pi_error = 0.0, perp_error = 0.0;
    std::string message;
    bool operator==(const OrbitRow&) const = default;
};

struct EigenFit {
    int index = 0;  // eigenvalue position by magnitude
    int order = 0;  // power of eps of the leading term
    double coefficient = 0.0;
    double series_coefficient = 0.0;  // from the jacobian series when available
    bool operator==(const EigenFit&) const = default;
};

struct ExpansionSection {
    bool present = false;
    std::vector<double> alpha0, alpha1, z0, z1;
    std::vector<double> A1, A2;  // row major
    std::vector<int> leading_order;
    std::vector<double> leading_re, leading_im;
    bool operator==(const ExpansionSection&) const = default;
};

struct DegreeRow {
    double eps = 0.0;
    bool ok = false;
    int degree = 0;
    std::vector<double> lo, hi;
    int zeros = 0;
    double boundary_min = 0.0;
    std::string message;
    bool operator==(const DegreeRow&) const = default;
};

struct SampleRow {
    double t = 0.0;
    std::vector<double> x;
    bool operator==(const SampleRow&) const = default;
};

struct RunReport {
    std::string tool = "lsavg";
    std::string version = "0.1.0";
    std::string problem;
    std::vector<std::string> states;
    int order = 0;
    double abs_tol = 0.0, rel_tol = 0.0, tol = 0.0;
    unsigned long long seed = 0;
    double wall_time = 0.0;
    std::vector<StageStatus> stages;
    std::vector<AveragedSample> averaged;
    std::vector<ReductionSection> reductions;
    std::vector<BranchRow> branch;
    HypothesisSection hypothesis;
    std::vector<OrbitRow> orbits;
    bool has_error_slopes = false;
    double pi_error_slope = 0.0, perp_error_slope = 0.0;
    std::vector<EigenFit> eigen_fits;
    ExpansionSection expansion;
    std::vector<DegreeRow> degree;
    double section_eps = 0.0;
    std::vector<SampleRow> section, trajectory;
    bool operator==(const RunReport&) const = default;

    bool passed() const {
        for (const auto& s : stages)
            if (s.status != "ok") return false;
        return true;
    }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(StageStatus, name, status, message)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(AveragedSample, z, g, error)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ReductionSample, alpha, f, det_delta)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ReductionSection, level, order, shift, r, zero, max_abs, min_abs_det_delta, samples)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(BranchRow, eps, found, a, z, residual, scale, det_delta, message)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(HypothesisSection, present, min_abs_det_delta, det_ok, r, k, l, l_fit, l_deviation, P0, l_reliable,
                                   l_condition, simple_root_path, pi_error_order, perp_error_order)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(OrbitRow, eps, converged, z, residual, iterations, eig_re, eig_im, classification, pi_error,
                                   perp_error, message)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(EigenFit, index, order, coefficient, series_coefficient)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ExpansionSection, present, alpha0, alpha1, z0, z1, A1, A2, leading_order, leading_re, leading_im)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(DegreeRow, eps, ok, degree, lo, hi, zeros, boundary_min, message)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(SampleRow, t, x)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(RunReport, tool, version, problem, states, order, abs_tol, rel_tol, tol, seed, wall_time, stages,
                                   averaged, reductions, branch, hypothesis, orbits, has_error_slopes, pi_error_slope, perp_error_slope,
                                   eigen_fits, expansion, degree, section_eps, section, trajectory)

inline std::string to_json_text(const RunReport& r) { return nlohmann::json(r).dump(2) + "\n"; }

inline RunReport report_from_json(const std::string& text) {
    try {
        return nlohmann::json::parse(text).get<RunReport>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("report: ") + e.what());
    }
}

namespace csv {

inline std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string join(const std::vector<double>& v, const char* sep = ";") {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + num(v[i]);
    return s;
}

inline std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

}  // namespace csv

inline std::string branch_csv(const RunReport& r) {
    std::ostringstream o;
    o << "eps,a_eps,residual,det_delta,l_fit\n";
    const std::string lf = r.hypothesis.present ? csv::num(r.hypothesis.l_fit) : "";
    for (const auto& b : r.branch) {
        if (!b.found) continue;
        o << csv::num(b.eps) << ',' << csv::join(b.a) << ',' << csv::num(b.residual) << ',' << csv::num(b.det_delta) << ',' << lf << '\n';
    }
    return o.str();
}

inline std::string averaged_csv(const RunReport& r) {
    std::ostringstream o;
    o << "z,i,g,error\n";
    for (const auto& a : r.averaged)
        for (std::size_t i = 0; i < a.g.size(); ++i)
            o << csv::join(a.z) << ',' << i + 1 << ',' << csv::join(a.g[i]) << ',' << csv::num(a.error[i]) << '\n';
    return o.str();
}

inline std::string bifurcation_csv(const RunReport& r) {
    std::ostringstream o;
    o << "level,alpha,i,f,det_delta\n";
    for (const auto& s : r.reductions)
        for (const auto& p : s.samples)
            for (std::size_t i = 0; i < p.f.size(); ++i)
                o << s.level << ',' << csv::join(p.alpha) << ',' << i + 1 << ',' << csv::join(p.f[i]) << ',' << csv::num(p.det_delta) << '\n';
    return o.str();
}

inline std::string orbits_csv(const RunReport& r) {
    std::ostringstream o;
    o << "eps,z,residual,eig_re,eig_im,classification,pi_error,perp_error\n";
    for (const auto& b : r.orbits) {
        if (!b.converged) continue;
        o << csv::num(b.eps) << ',' << csv::join(b.z) << ',' << csv::num(b.residual) << ',' << csv::join(b.eig_re) << ','
          << csv::join(b.eig_im) << ',' << b.classification << ',' << csv::num(b.pi_error) << ',' << csv::num(b.perp_error) << '\n';
    }
    return o.str();
}

inline std::string degree_csv(const RunReport& r) {
    std::ostringstream o;
    o << "eps,degree,lo,hi,zeros,boundary_min\n";
    for (const auto& d : r.degree) {
        if (!d.ok) continue;
        o << csv::num(d.eps) << ',' << d.degree << ',' << csv::join(d.lo) << ',' << csv::join(d.hi) << ',' << d.zeros << ','
          << csv::num(d.boundary_min) << '\n';
    }
    return o.str();
}

inline std::string samples_csv(const std::vector<SampleRow>& rows, const std::vector<std::string>& states, const std::string& tname) {
    std::ostringstream o;
    o << tname;
    for (const auto& s : states) o << ',' << s;
    o << '\n';
    for (const auto& row : rows) {
        o << csv::num(row.t);
        for (double v : row.x) o << ',' << csv::num(v);
        o << '\n';
    }
    return o.str();
}

namespace svg {

struct Series {
    std::vector<double> x, y;
    bool points = false;
};

/// Static plot of one or more series in a framed box; `logx` plots log10 x.
inline std::string plot(const std::string& title, const std::string& xl, const std::string& yl, const std::vector<Series>& series,
                        bool logx = false) {
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    auto X = [&](double v) { return logx ? std::log10(v) : v; };
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            x0 = std::min(x0, X(s.x[i]));
            x1 = std::max(x1, X(s.x[i]));
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    if (!(x0 < x1)) x0 -= 1, x1 += 1;
    if (!(y0 < y1)) y0 -= 1, y1 += 1;
    const double W = 640, H = 480, L = 70, R = 20, T = 40, B = 50;
    auto px = [&](double v) { return L + (X(v) - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double v) { return H - B - (v - y0) / (y1 - y0) * (H - T - B); };
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
    o << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << xl << "</text>\n";
    o << "<text x=\"16\" y=\"" << H / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << H / 2 << ")\">" << yl << "</text>\n";
    auto label = [&](double v) {
        char b[32];
        std::snprintf(b, sizeof b, "%.4g", v);
        return std::string(b);
    };
    o << "<text x=\"" << L << "\" y=\"" << H - B + 16 << "\" text-anchor=\"start\">" << label(logx ? std::pow(10, x0) : x0) << "</text>\n";
    o << "<text x=\"" << W - R << "\" y=\"" << H - B + 16 << "\" text-anchor=\"end\">" << label(logx ? std::pow(10, x1) : x1) << "</text>\n";
    o << "<text x=\"" << L - 4 << "\" y=\"" << H - B << "\" text-anchor=\"end\">" << label(y0) << "</text>\n";
    o << "<text x=\"" << L - 4 << "\" y=\"" << T + 10 << "\" text-anchor=\"end\">" << label(y1) << "</text>\n";
    const char* colors[] = {"#1f5fa8", "#b8372c", "#2e8540", "#6b4c9a"};
    int c = 0;
    for (const auto& s : series) {
        const char* col = colors[c++ % 4];
        if (s.points) {
            for (std::size_t i = 0; i < s.x.size(); ++i)
                o << "<circle cx=\"" << csv::num(px(s.x[i])) << "\" cy=\"" << csv::num(py(s.y[i])) << "\" r=\"2\" fill=\"" << col << "\"/>\n";
        } else {
            o << "<polyline fill=\"none\" stroke=\"" << col << "\" points=\"";
            for (std::size_t i = 0; i < s.x.size(); ++i) o << (i ? " " : "") << csv::num(px(s.x[i])) << ',' << csv::num(py(s.y[i]));
            o << "\"/>\n";
        }
    }
    o << "</svg>\n";
    return o.str();
}

}  // namespace svg

/// Pretty text summary.
inline std::string text_summary(const RunReport& r) {
    std::ostringstream o;
    o << r.tool << ' ' << r.version << "  problem " << r.problem << "  order " << r.order << '\n';
    for (const auto& s : r.stages) o << "  stage " << s.name << ": " << s.status << (s.message.empty() ? "" : "  (" + s.message + ")") << '\n';
    for (const auto& s : r.reductions) {
        o << "  reduction " << s.level << ": r = " << s.r << ", min |det Delta| = " << csv::num(s.min_abs_det_delta) << '\n';
    }
    if (r.hypothesis.present) {
        const auto& h = r.hypothesis;
        o << "  hypotheses: k = " << h.k << ", r = " << h.r << ", l = " << h.l << " (fit " << csv::num(h.l_fit) << ")"
          << ", l <= (k+r+1)/2: " << (h.l_condition ? "yes" : "no") << ", P0 = " << csv::num(h.P0) << '\n';
    }
    for (const auto& b : r.branch) {
        o << "  eps " << csv::num(b.eps) << "  ";
        if (b.found)
            o << "a_eps " << csv::join(b.a, " ") << "  residual " << csv::num(b.residual) << '\n';
        else
            o << b.message << '\n';
    }
    for (const auto& b : r.orbits) {
        o << "  orbit eps " << csv::num(b.eps) << "  ";
        if (b.converged)
            o << "z* " << csv::join(b.z, " ") << "  residual " << csv::num(b.residual) << "  " << b.classification << '\n';
        else
            o << b.message << '\n';
    }
    if (r.has_error_slopes)
        o << "  error slopes: pi " << csv::num(r.pi_error_slope) << ", pi_perp " << csv::num(r.perp_error_slope) << '\n';
    for (const auto& f : r.eigen_fits)
        o << "  eigenvalue " << f.index << ": eps^" << f.order << " coefficient " << csv::num(f.coefficient) << '\n';
    for (const auto& d : r.degree) o << "  degree eps " << csv::num(d.eps) << ": " << (d.ok ? std::to_string(d.degree) : d.message) << '\n';
    return o.str();
}

/// Files for one output format; names are relative to the output directory.
inline std::vector<std::pair<std::string, std::string>> render(const RunReport& r, const std::string& format) {
    std::vector<std::pair<std::string, std::string>> files;
    if (format == "csv") {
        files = {{"averaged.csv", averaged_csv(r)},       {"bifurcation.csv", bifurcation_csv(r)}, {"branch.csv", branch_csv(r)},
                 {"orbits.csv", orbits_csv(r)},           {"degree.csv", degree_csv(r)},
                 {"section.csv", samples_csv(r.section, r.states, "period")},
                 {"trajectory.csv", samples_csv(r.trajectory, r.states, "t")}};
    } else if (format == "svg") {
        svg::Series amp, sec, traj;
        for (const auto& b : r.orbits)
            if (b.converged) {
                amp.x.push_back(b.eps);
                amp.y.push_back(b.z[0]);
            }
        sec.points = true;
        for (const auto& s : r.section) {
            sec.x.push_back(s.x[0]);
            sec.y.push_back(s.x.size() > 1 ? s.x[1] : 0.0);
        }
        for (const auto& s : r.trajectory) {
            traj.x.push_back(s.x[0]);
            traj.y.push_back(s.x.size() > 1 ? s.x[1] : 0.0);
        }
        const std::string s0 = r.states.empty() ? "x1" : r.states[0], s1 = r.states.size() > 1 ? r.states[1] : "x2";
        files = {{"amplitude.svg", svg::plot(s0 + "(0, eps) of refined orbits", "eps", s0, {amp}, true)},
                 {"section.svg", svg::plot("section t = 0 mod T", s0, s1, {sec})},
                 {"trajectory.svg", svg::plot("trajectory projection", s0, s1, {traj})}};
    } else if (format == "text") {
        files = {{"summary.txt", text_summary(r)}};
    } else {
        throw ValidationError("unknown format " + format + " (csv, svg or text)");
    }
    files.push_back({"report.json", to_json_text(r)});
    return files;
}

inline void emit(const RunReport& r, const std::string& format, const std::filesystem::path& dir) {
    auto files = render(r, format);
    std::filesystem::create_directories(dir);
    for (const auto& [name, text] : files) {
        std::ofstream f(dir / name, std::ios::binary);
        if (!f) throw Error("cannot write " + (dir / name).string());
        f << text;
        if (!f) throw Error("write failed for " + (dir / name).string());
    }
}

}  // namespace lsavg
