#pragma once

#include <chrono>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "lsavg/problem.hpp"
#include "lsavg/report.hpp"
#include "lsavg/verify.hpp"

namespace lsavg {

struct PipelineOptions {
    int section_periods = 20;
    int trajectory_periods = 3;
    int samples_per_period = 64;
    double certify_Q = 1.0;
    double chart_tol = 1e-6;  // max |x(T, z_alpha, 0) - z_alpha| on chart samples
};

/// Requested stages plus their prerequisites, in execution order.
inline std::vector<std::string> stage_closure(const std::vector<std::string>& requested) {
    bool want[5] = {false, false, false, false, false};
    const auto& names = known_stages();
    for (const auto& s : requested) {
        auto it = std::find(names.begin(), names.end(), s);
        if (it == names.end()) throw ValidationError("unknown stage " + s);
        want[it - names.begin()] = true;
    }
    if (want[3] || want[4]) want[2] = true;
    if (want[2]) want[1] = true;
    if (want[1]) want[0] = true;
    std::vector<std::string> out;
    for (int i = 0; i < 5; ++i)
        if (want[i]) out.push_back(names[i]);
    return out;
}

namespace detail {

inline std::vector<double> to_std(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline std::vector<double> row_major(const Mat& A) {
    std::vector<double> v;
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j) v.push_back(A(i, j));
    return v;
}

inline bool unperturbed_field_vanishes(const VectorFieldSeries& F) {
    for (int s = 0; s < 8; ++s) {
        Vec x = Vec::LinSpaced(F.dim(), 0.3 + 0.1 * s, -0.7 + 0.2 * s);
        if (F.eval(0, F.period * (s + 0.5) / 8, x).norm() != 0.0) return false;
    }
    return true;
}

inline ReductionSection reduction_section(const BifurcationSeries& bf, const OrderReport& rep, const std::string& level, int shift,
                                          int per_dim) {
    ReductionSection s;
    s.level = level;
    s.order = bf.order();
    s.shift = shift;
    s.r = rep.r;
    for (bool z : rep.zero) s.zero.push_back(z ? 1 : 0);
    s.max_abs = rep.max_abs;
    s.min_abs_det_delta = rep.min_abs_det_delta;
    for (const Vec& a : zero_test_samples(bf.chart(), per_dim)) {
        const ReductionPoint& p = bf.at(a);
        ReductionSample q;
        q.alpha = to_std(a);
        for (const Vec& f : p.f) q.f.push_back(to_std(f));
        q.det_delta = p.det_delta;
        s.samples.push_back(std::move(q));
    }
    return s;
}

}  // namespace detail

/// avg -> reduce -> solve -> verify / degree. Failures are recorded per stage
/// and downstream stages are skipped.
inline RunReport run_pipeline(const Problem& P, const std::vector<std::string>& requested, const PipelineOptions& opt = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<std::string> stages = stage_closure(requested);
    const RunSpec& run = P.run;
    const VectorFieldSeries& F = P.field;
    const int k = run.order;
    if (k < 1 || k > F.order()) throw ValidationError("run order must be in 1.." + std::to_string(F.order()));
    if (P.nested && P.nested->shift >= k) throw ValidationError("nested shift must be below the run order");
    auto has = [&](const char* s) { return std::find(stages.begin(), stages.end(), s) != stages.end(); };
    if (has("solve") && run.eps.empty()) throw ValidationError("solve needs a nonempty eps grid");
    for (double e : run.eps)
        if (e == 0.0) throw ValidationError("eps grid must exclude 0");

    RunReport R;
    R.problem = P.name;
    R.states = F.decl->states;
    R.order = k;
    R.abs_tol = run.integrator.abs_tol;
    R.rel_tol = run.integrator.rel_tol;
    R.tol = run.tol;
    R.seed = run.seed;

    auto gs = std::make_shared<AveragingGSeries>(F, k, run.integrator);
    std::unique_ptr<BifurcationSeries> bf;
    OrderReport rep;
    BranchResult br;
    bool failed = false;

    auto stage = [&](const std::string& name, auto&& body) {
        if (!has(name.c_str())) return;
        StageStatus st{name, "ok", ""};
        if (failed) {
            st.status = "skipped";
            st.message = "an earlier stage failed";
        } else {
            try {
                std::string msg = body();
                if (!msg.empty()) {
                    st.status = "failed";
                    st.message = msg;
                }
            } catch (const std::exception& e) {
                st.status = "failed";
                st.message = e.what();
            }
            failed = failed || st.status != "ok";
        }
        R.stages.push_back(st);
    };

    stage("avg", [&]() -> std::string {
        const double defect = chart_defect(F, P.chart, 4, run.integrator);
        for (const Vec& a : zero_test_samples(P.chart, run.avg_samples)) {
            AveragedSeries s = averaged_functions(F, P.chart.embed(a), k, run.integrator);
            AveragedSample q;
            q.z = detail::to_std(s.z);
            for (int i = 1; i <= k; ++i) {
                q.g.push_back(detail::to_std(s.g[i]));
                q.error.push_back(s.error[i].cwiseAbs().maxCoeff());
            }
            R.averaged.push_back(std::move(q));
        }
        if (defect > opt.chart_tol) return "chart points are not T-periodic for the unperturbed system (defect " + csv::num(defect) + ")";
        return "";
    });

    stage("reduce", [&]() -> std::string {
        bf = std::make_unique<BifurcationSeries>(gs, P.chart, k);
        rep = detect_order(*bf, run.zero_grid);
        R.reductions.push_back(detail::reduction_section(*bf, rep, "base", 0, run.zero_grid));
        if (P.nested) {
            const int shift = P.nested->shift;
            auto sh = nested_reduction(gs, shift, P.nested->chart);
            bf = std::make_unique<BifurcationSeries>(sh, P.nested->chart, k - shift);
            rep = detect_order(*bf, run.zero_grid);
            R.reductions.push_back(detail::reduction_section(*bf, rep, "nested", shift, run.zero_grid));
        }
        if (rep.r == 0) return "all bifurcation functions vanish identically";
        return "";
    });

    stage("solve", [&]() -> std::string {
        BranchConfig bc;
        bc.tol = run.tol;
        bc.seed = run.seed;
        bc.samples = run.zero_grid;
        br = find_branch(*bf, run.eps, bc);
        int missing = 0;
        for (const auto& p : br.points) {
            BranchRow row;
            row.eps = p.eps;
            row.found = p.found;
            row.message = p.message;
            if (p.found) {
                row.a = detail::to_std(p.a);
                row.z = detail::to_std(p.z);
                row.residual = p.residual;
                row.scale = p.scale;
                row.det_delta = p.det_delta;
            } else {
                ++missing;
            }
            R.branch.push_back(std::move(row));
        }
        if (missing == static_cast<int>(br.points.size())) return "no root at any eps";
        HypothesisReport h = check_hypotheses(*bf, br, rep);
        auto& H = R.hypothesis;
        H.present = true;
        H.min_abs_det_delta = h.min_abs_det_delta;
        H.det_ok = h.det_ok;
        H.r = h.r;
        H.k = h.k;
        H.l = h.l;
        H.l_fit = h.l_fit;
        H.l_deviation = h.l_deviation;
        H.P0 = h.P0;
        H.l_reliable = h.l_reliable;
        H.l_condition = h.l_condition;
        H.simple_root_path = h.simple_root_path;
        H.pi_error_order = h.pi_error_order;
        H.perp_error_order = h.perp_error_order;
        if (missing) return "no root at " + std::to_string(missing) + " of " + std::to_string(br.points.size()) + " eps values";
        return "";
    });

    stage("verify", [&]() -> std::string {
        const ManifoldChart& ch = bf->chart();
        RefineConfig rc;
        rc.integrator = run.integrator;
        int bad = 0;
        std::vector<double> E, pe, qe;
        std::vector<std::vector<Complex>> eigs;
        Vec z_section;
        double eps_section = 0.0;
        for (const auto& p : br.points) {
            if (!p.found) continue;
            OrbitRow row;
            row.eps = p.eps;
            try {
                PeriodicOrbit o = refine_periodic(F, p.z, p.eps, rc);
                row.converged = true;
                row.z = detail::to_std(o.z);
                row.residual = o.residual;
                row.iterations = o.iterations;
                for (const Complex& l : o.eigenvalues) {
                    row.eig_re.push_back(l.real());
                    row.eig_im.push_back(l.imag());
                }
                row.classification = to_string(o.stability);
                const Vec zh = p.z;
                row.pi_error = (o.z.head(ch.m) - zh.head(ch.m)).norm();
                row.perp_error = (o.z.tail(ch.codim()) - zh.tail(ch.codim())).norm();
                E.push_back(std::fabs(p.eps));
                pe.push_back(row.pi_error);
                qe.push_back(row.perp_error);
                eigs.push_back(o.eigenvalues);
                if (std::fabs(p.eps) >= eps_section) {
                    eps_section = std::fabs(p.eps);
                    z_section = o.z;
                    R.section_eps = p.eps;
                }
            } catch (const Error& e) {
                row.message = e.what();
                ++bad;
            }
            R.orbits.push_back(std::move(row));
        }
        auto positive = [](const std::vector<double>& v) {
            return std::all_of(v.begin(), v.end(), [](double x) { return x > 0; });
        };
        if (E.size() >= 2 && positive(pe) && (ch.codim() == 0 || positive(qe))) {
            R.has_error_slopes = true;
            R.pi_error_slope = loglog_slope(E, pe);
            R.perp_error_slope = ch.codim() ? loglog_slope(E, qe) : 0.0;
        }

        // z(eps) = z0 + eps z1 and, for F0 = 0, D_z h = eps A1 + eps^2 A2
        if (rep.r >= 1 && bf->order() >= rep.r + 1) {
            try {
                const BranchPoint* first = nullptr;
                for (const auto& p : br.points)
                    if (p.found && (!first || std::fabs(p.eps) < std::fabs(first->eps))) first = &p;
                if (first) {
                    BranchExpansion ex = expand_branch(*bf, rep.r, first->a);
                    auto& X = R.expansion;
                    X.present = true;
                    X.alpha0 = detail::to_std(ex.alpha0);
                    X.alpha1 = detail::to_std(ex.alpha1);
                    X.z0 = detail::to_std(ex.z0);
                    X.z1 = detail::to_std(ex.z1);
                    if (detail::unperturbed_field_vanishes(F) && k >= 2) {
                        JacobianSeries js = jacobian_series(*gs, ex.z0, ex.z1);
                        X.A1 = detail::row_major(js.A1);
                        X.A2 = detail::row_major(js.A2);
                        for (const auto& l : js.leading) {
                            X.leading_order.push_back(l.order);
                            X.leading_re.push_back(l.coefficient.real());
                            X.leading_im.push_back(l.coefficient.imag());
                        }
                    }
                }
            } catch (const Error&) {
                R.expansion = ExpansionSection{};
            }
        }

        // leading eps power and coefficient of each eigenvalue of D_z h
        if (E.size() >= 3) {
            const int n = F.dim();
            for (int j = 0; j < n; ++j) {
                std::vector<double> mag, re;
                for (const auto& ev : eigs) {
                    mag.push_back(std::abs(ev[j]));
                    re.push_back(ev[j].real());
                }
                if (!positive(mag)) continue;
                EigenFit f;
                f.index = j;
                f.order = static_cast<int>(std::lround(loglog_slope(E, mag)));
                std::vector<double> scaled;
                for (std::size_t i = 0; i < E.size(); ++i) scaled.push_back(re[i] / std::pow(E[i], f.order));
                f.coefficient = fit_line(E, scaled).intercept;
                const auto& X = R.expansion;
                int matches = 0;
                for (std::size_t q = 0; q < X.leading_order.size(); ++q)
                    if (X.leading_order[q] == f.order) {
                        ++matches;
                        f.series_coefficient = X.leading_re[q];
                    }
                if (matches != 1) f.series_coefficient = 0.0;
                R.eigen_fits.push_back(f);
            }
        }

        if (z_section.size()) {
            try {
                int j = 0;
                for (const Vec& x : stroboscopic(F, z_section, R.section_eps, opt.section_periods, run.integrator))
                    R.section.push_back({static_cast<double>(j++), detail::to_std(x)});
            } catch (const IntegrationError&) {
            }
            try {
                for (const auto& s : trajectory(F, z_section, R.section_eps, opt.trajectory_periods, opt.samples_per_period, run.integrator))
                    R.trajectory.push_back({s.t, detail::to_std(s.x)});
            } catch (const IntegrationError&) {
            }
        }
        if (bad) return "refinement failed at " + std::to_string(bad) + " eps values";
        return "";
    });

    stage("degree", [&]() -> std::string {
        const int l = R.hypothesis.present ? R.hypothesis.l : 0;
        int bad = 0;
        for (const auto& p : br.points) {
            if (!p.found) continue;
            DegreeRow row;
            row.eps = p.eps;
            const double rad = opt.certify_Q * std::pow(std::fabs(p.eps), bf->order() + 1 - l);
            const Vec lo = p.a.array() - rad, hi = p.a.array() + rad;
            row.lo = detail::to_std(lo);
            row.hi = detail::to_std(hi);
            try {
                DegreeConfig dc;
                dc.starts_per_dim = 4;
                dc.random_starts = 0;
                dc.boundary_per_dim = 4;
                dc.seed = run.seed;
                const double e = p.eps;
                const int upto = bf->order();
                DegreeCertificate c = brouwer_degree([&](const Vec& a) { return bf->value(a, e, upto); }, lo, hi, Vec::Zero(lo.size()), dc);
                row.ok = c.degree != 0;
                row.degree = c.degree;
                row.zeros = static_cast<int>(c.zeros.size());
                row.boundary_min = c.boundary_min;
                if (!row.ok) row.message = "degree 0";
            } catch (const Error& e) {
                row.message = e.what();
            }
            if (!row.ok) ++bad;
            R.degree.push_back(std::move(row));
        }
        if (bad) return "no degree certificate at " + std::to_string(bad) + " eps values";
        return "";
    });

    R.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return R;
}

}  // namespace lsavg
