#include "tem/solver.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>

#include "tem/kernels.hpp"

namespace tem::opt {

void Problem::add_squared_row(const std::vector<std::pair<int, double>>& terms, double rhs,
                              double w) {
    if (w == 0.0) return;
    for (std::size_t a = 0; a < terms.size(); ++a) {
        add_quad(terms[a].first, terms[a].first, w * terms[a].second * terms[a].second);
        for (std::size_t b = a + 1; b < terms.size(); ++b)
            add_quad(terms[a].first, terms[b].first, 2.0 * w * terms[a].second * terms[b].second);
        c[terms[a].first] += -2.0 * w * rhs * terms[a].second;
    }
    c0 += w * rhs * rhs;
}

double Problem::objective_value(const std::vector<double>& x) const {
    double f = c0;
    for (const auto& t : quad) f += t.w * x[t.i] * x[t.j];
    f += kernels::dot(c.data(), x.data(), x.size());
    return f;
}

namespace {

struct Member {
    int red = -1;      // reduced index, or -1 when fixed
    double val = 0.0;  // fixed value when red < 0
};

struct RedRow {
    std::vector<std::pair<int, double>> terms;  // reduced indices
    double rhs;
    int orig = -1;
};

struct RedCone {
    Member x, y, u, v;  // u/v unused for capped circles
    double cap2 = 0.0;
    bool rotated = false;
};

struct Reduced {
    int nr = 0;
    std::vector<int> red;      // orig -> reduced (-1 fixed)
    std::vector<int> inv;      // reduced -> orig
    std::vector<double> fixed; // orig-length fixed values (valid where red<0)
    std::vector<QuadTerm> quad;
    std::vector<double> c;
    std::vector<double> lo, hi;
    std::vector<RedRow> eq, ineq;
    std::vector<RedCone> cones;
    int m_bar = 0;  // barrier term count (gap accounting)
    bool infeasible = false;
    std::string why;
};

Member member_of(const Reduced& r, int orig) {
    if (r.red[orig] >= 0) return {r.red[orig], 0.0};
    return {-1, r.fixed[orig]};
}

Reduced presolve(const Problem& p) {
    Reduced r;
    r.red.assign(p.n, -1);
    r.fixed.assign(p.n, 0.0);
    for (int i = 0; i < p.n; ++i) {
        if (p.lo[i] > p.hi[i] + 1e-12) {
            r.infeasible = true;
            r.why = "box lower bound exceeds upper bound";
            return r;
        }
        if (std::isfinite(p.lo[i]) && std::isfinite(p.hi[i]) && p.hi[i] - p.lo[i] <= 1e-12) {
            r.fixed[i] = 0.5 * (p.lo[i] + p.hi[i]);
        } else {
            r.red[i] = r.nr++;
            r.inv.push_back(i);
            r.lo.push_back(p.lo[i]);
            r.hi.push_back(p.hi[i]);
        }
    }
    r.c.assign(r.nr, 0.0);
    for (int i = 0; i < p.n; ++i)
        if (r.red[i] >= 0) r.c[r.red[i]] = p.c[i];

    for (const auto& t : p.quad) {
        const int ri = r.red[t.i], rj = r.red[t.j];
        if (ri >= 0 && rj >= 0) {
            r.quad.push_back({ri, rj, t.w});
        } else if (ri >= 0) {
            r.c[ri] += (t.i == t.j) ? 2.0 * t.w * r.fixed[t.j] : t.w * r.fixed[t.j];
            // i==j fixed can't happen here (ri>=0 means i free)
        } else if (rj >= 0) {
            r.c[rj] += t.w * r.fixed[t.i];
        }
        // both fixed: constant, ignored (objective reported via full x)
    }

    auto reduce_row = [&](const LinRow& row, int orig_idx, bool equality) -> bool {
        RedRow rr;
        rr.rhs = row.rhs;
        rr.orig = orig_idx;
        for (const auto& [i, coef] : row.terms) {
            if (r.red[i] >= 0)
                rr.terms.emplace_back(r.red[i], coef);
            else
                rr.rhs -= coef * r.fixed[i];
        }
        if (rr.terms.empty()) {
            const double tol = 1e-9 * std::max(1.0, std::fabs(row.rhs));
            if (equality ? std::fabs(rr.rhs) > tol : rr.rhs < -tol) {
                r.infeasible = true;
                r.why = equality ? "fixed variables contradict an equality row"
                                 : "fixed variables contradict an inequality row";
                return false;
            }
            return true;  // trivially satisfied, dropped
        }
        (equality ? r.eq : r.ineq).push_back(std::move(rr));
        return true;
    };
    for (std::size_t k = 0; k < p.eq.size(); ++k)
        if (!reduce_row(p.eq[k], static_cast<int>(k), true)) return r;
    for (std::size_t k = 0; k < p.ineq.size(); ++k)
        if (!reduce_row(p.ineq[k], static_cast<int>(k), false)) return r;

    for (const auto& s : p.socs) {
        RedCone c;
        c.x = member_of(r, s.ix);
        c.y = member_of(r, s.iy);
        c.cap2 = s.cap * s.cap;
        c.rotated = false;
        if (c.x.red < 0 && c.y.red < 0) {
            if (c.x.val * c.x.val + c.y.val * c.y.val > c.cap2 + 1e-12) {
                r.infeasible = true;
                r.why = "fixed variables violate a line-limit circle";
                return r;
            }
            continue;
        }
        r.cones.push_back(c);
    }
    for (const auto& rc : p.rcones) {
        RedCone c;
        c.x = member_of(r, rc.ix);
        c.y = member_of(r, rc.iy);
        c.u = member_of(r, rc.iu);
        c.v = member_of(r, rc.iv);
        c.rotated = true;
        if (c.x.red < 0 && c.y.red < 0 && c.u.red < 0 && c.v.red < 0) {
            if (c.x.val * c.x.val + c.y.val * c.y.val > c.u.val * c.v.val + 1e-12) {
                r.infeasible = true;
                r.why = "fixed variables violate a cone constraint";
                return r;
            }
            continue;
        }
        r.cones.push_back(c);
    }

    for (int k = 0; k < r.nr; ++k) {
        if (std::isfinite(r.lo[k])) ++r.m_bar;
        if (std::isfinite(r.hi[k])) ++r.m_bar;
    }
    r.m_bar += static_cast<int>(r.ineq.size());
    for (const auto& c : r.cones) r.m_bar += c.rotated ? 2 : 1;
    return r;
}

double mval(const Member& m, const Eigen::VectorXd& z) { return m.red >= 0 ? z[m.red] : m.val; }

// Minimum barrier slack across all inequality structure; <= 0 means outside.
double min_slack(const Reduced& r, const Eigen::VectorXd& z) {
    double m = kInf;
    for (int k = 0; k < r.nr; ++k) {
        if (std::isfinite(r.lo[k])) m = std::min(m, z[k] - r.lo[k]);
        if (std::isfinite(r.hi[k])) m = std::min(m, r.hi[k] - z[k]);
    }
    for (const auto& row : r.ineq) {
        double s = row.rhs;
        for (const auto& [i, coef] : row.terms) s -= coef * z[i];
        m = std::min(m, s);
    }
    for (const auto& c : r.cones) {
        const double x = mval(c.x, z), y = mval(c.y, z);
        const double rhs = c.rotated ? mval(c.u, z) * mval(c.v, z) : c.cap2;
        m = std::min(m, rhs - x * x - y * y);
    }
    return m;
}

struct Workspace {
    Eigen::VectorXd grad;                     // t*grad f + grad phi
    std::vector<Eigen::Triplet<double>> hts;  // Hessian triplets
};

// Gradient and Hessian of t*f + phi at z.
void eval_center(const Reduced& r, double t, const Eigen::VectorXd& z, Workspace& w) {
    const int n = r.nr;
    w.grad.setZero(n);
    w.hts.clear();
    for (int k = 0; k < n; ++k) w.grad[k] = t * r.c[k];
    for (const auto& q : r.quad) {
        if (q.i == q.j) {
            w.grad[q.i] += t * 2.0 * q.w * z[q.i];
            w.hts.emplace_back(q.i, q.i, t * 2.0 * q.w);
        } else {
            w.grad[q.i] += t * q.w * z[q.j];
            w.grad[q.j] += t * q.w * z[q.i];
            w.hts.emplace_back(q.i, q.j, t * q.w);
            w.hts.emplace_back(q.j, q.i, t * q.w);
        }
    }
    for (int k = 0; k < n; ++k) {
        if (std::isfinite(r.lo[k])) {
            const double s = z[k] - r.lo[k];
            w.grad[k] += -1.0 / s;
            w.hts.emplace_back(k, k, 1.0 / (s * s));
        }
        if (std::isfinite(r.hi[k])) {
            const double s = r.hi[k] - z[k];
            w.grad[k] += 1.0 / s;
            w.hts.emplace_back(k, k, 1.0 / (s * s));
        }
    }
    for (const auto& row : r.ineq) {
        double s = row.rhs;
        for (const auto& [i, coef] : row.terms) s -= coef * z[i];
        for (const auto& [i, coef] : row.terms) {
            w.grad[i] += coef / s;
            for (const auto& [j, coef2] : row.terms)
                w.hts.emplace_back(i, j, coef * coef2 / (s * s));
        }
    }
    for (const auto& c : r.cones) {
        const double x = mval(c.x, z), y = mval(c.y, z);
        const double u = c.rotated ? mval(c.u, z) : 0.0;
        const double v = c.rotated ? mval(c.v, z) : 0.0;
        const double s = (c.rotated ? u * v : c.cap2) - x * x - y * y;
        // members and gradient of the slack s
        const Member* mem[4] = {&c.x, &c.y, &c.u, &c.v};
        const double gs[4] = {-2.0 * x, -2.0 * y, v, u};
        const int cnt = c.rotated ? 4 : 2;
        for (int a = 0; a < cnt; ++a) {
            if (mem[a]->red < 0) continue;
            w.grad[mem[a]->red] += -gs[a] / s;
            for (int b = 0; b < cnt; ++b) {
                if (mem[b]->red < 0) continue;
                double h = gs[a] * gs[b] / (s * s);
                // -hess(s)/s: d2s/dx2 = d2s/dy2 = -2; d2s/dudv = 1
                if (a == b && a < 2) h += 2.0 / s;
                if (c.rotated && ((a == 2 && b == 3) || (a == 3 && b == 2))) h += -1.0 / s;
                w.hts.emplace_back(mem[a]->red, mem[b]->red, h);
            }
        }
    }
}

Eigen::VectorXd eq_residual_vec(const Reduced& r, const Eigen::VectorXd& z) {
    Eigen::VectorXd res(r.eq.size());
    for (std::size_t k = 0; k < r.eq.size(); ++k) {
        double s = -r.eq[k].rhs;
        for (const auto& [i, coef] : r.eq[k].terms) s += coef * z[i];
        res[k] = s;
    }
    return res;
}

}  // namespace

Result solve(const Problem& prob, std::vector<double> x0, const Options& opts) {
    Result out;
    Reduced r = presolve(prob);
    if (r.infeasible) {
        out.status = SolveStatus::Infeasible;
        out.message = r.why;
        return out;
    }
    const int n = r.nr;
    const int p = static_cast<int>(r.eq.size());

    if (static_cast<int>(x0.size()) != prob.n) x0.assign(prob.n, 0.0);
    Eigen::VectorXd z(n);
    for (int k = 0; k < n; ++k) z[k] = x0[r.inv[k]];

    // Repair: clamp into boxes, then inflate/shrink cone members minimally.
    for (int k = 0; k < n; ++k) {
        double lo = r.lo[k], hi = r.hi[k];
        double margin = 1e-6;
        if (std::isfinite(lo) && std::isfinite(hi)) margin = std::min((hi - lo) * 0.25, 1e-6);
        if (std::isfinite(lo)) z[k] = std::max(z[k], lo + margin);
        if (std::isfinite(hi)) z[k] = std::min(z[k], hi - margin);
    }
    for (const auto& c : r.cones) {
        const double x = mval(c.x, z), y = mval(c.y, z);
        const double nrm2 = x * x + y * y;
        if (c.rotated) {
            const double u = mval(c.u, z);
            double v = mval(c.v, z);
            if (nrm2 >= u * v && c.v.red >= 0 && u > 0.0) {
                double want = nrm2 / u * 1.05 + 1e-9;
                const double vhi = r.hi[c.v.red];
                if (std::isfinite(vhi)) want = std::min(want, vhi - std::min((vhi) * 0.01 + 1e-12, 1e-6));
                z[c.v.red] = std::max(v, want);
            }
            const double s = mval(c.u, z) * mval(c.v, z) - nrm2;
            if (s <= 0.0 && nrm2 > 0.0) {
                const double target = std::max(mval(c.u, z) * mval(c.v, z), 0.0) * 0.9;
                const double scale = target > 0.0 ? std::sqrt(target / nrm2) : 0.0;
                if (c.x.red >= 0) z[c.x.red] = x * scale;
                if (c.y.red >= 0) z[c.y.red] = y * scale;
            }
        } else if (nrm2 >= c.cap2) {
            const double scale = std::sqrt(0.9 * c.cap2 / nrm2);
            if (c.x.red >= 0) z[c.x.red] = x * scale;
            if (c.y.red >= 0) z[c.y.red] = y * scale;
        }
    }
    if (n > 0 && min_slack(r, z) <= 0.0) {
        out.status = SolveStatus::Infeasible;
        out.message = "could not construct a strictly feasible starting point";
        return out;
    }

    Eigen::VectorXd w = Eigen::VectorXd::Zero(p);
    Workspace ws;
    double t = (r.m_bar == 0) ? 1.0 : opts.t0;
    const bool pure_eq = (r.m_bar == 0);
    int total_newton = 0;
    bool converged = false;
    std::string note;

    for (int outer = 0; outer < opts.max_outer; ++outer) {
        for (int inner = 0; inner < opts.max_inner; ++inner) {
            eval_center(r, t, z, ws);
            Eigen::VectorXd rpri = eq_residual_vec(r, z);
            Eigen::VectorXd rdual = ws.grad;
            for (int k = 0; k < p; ++k)
                for (const auto& [i, coef] : r.eq[k].terms) rdual[i] += coef * w[k];

            // KKT assembly
            const int dim = n + p;
            std::vector<Eigen::Triplet<double>> kts = ws.hts;
            kts.reserve(kts.size() + 4 * p + dim);
            for (int k = 0; k < p; ++k)
                for (const auto& [i, coef] : r.eq[k].terms) {
                    kts.emplace_back(i, n + k, coef);
                    kts.emplace_back(n + k, i, coef);
                }
            Eigen::VectorXd rhs(dim), step;
            rhs.head(n) = -rdual;
            rhs.tail(p) = -rpri;

            bool solved = false;
            double reg = 0.0;
            for (int attempt = 0; attempt < 5 && !solved; ++attempt) {
                std::vector<Eigen::Triplet<double>> kts2 = kts;
                if (reg > 0.0)
                    for (int i = 0; i < dim; ++i) kts2.emplace_back(i, i, i < n ? reg : -reg);
                if (dim <= 100) {
                    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(dim, dim);
                    for (const auto& tp : kts2) K(tp.row(), tp.col()) += tp.value();
                    Eigen::PartialPivLU<Eigen::MatrixXd> lu(K);
                    step = lu.solve(rhs);
                } else {
                    Eigen::SparseMatrix<double> K(dim, dim);
                    K.setFromTriplets(kts2.begin(), kts2.end());
                    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
                    lu.compute(K);
                    if (lu.info() != Eigen::Success) {
                        reg = (reg == 0.0) ? 1e-10 : reg * 100.0;
                        continue;
                    }
                    step = lu.solve(rhs);
                }
                solved = step.allFinite();
                if (!solved) reg = (reg == 0.0) ? 1e-10 : reg * 100.0;
            }
            if (!solved) {
                out.status = SolveStatus::NumericalFailure;
                out.message = "KKT factorization failed";
                return out;
            }
            Eigen::VectorXd dz = step.head(n), dw = step.tail(p);
            ++total_newton;

            // Newton decrement (scale-free for t*f + phi)
            double lambda2 = 0.0;
            {
                Eigen::VectorXd hdz = Eigen::VectorXd::Zero(n);
                for (const auto& tp : ws.hts) hdz[tp.row()] += tp.value() * dz[tp.col()];
                lambda2 = dz.dot(hdz);
            }
            if (lambda2 * 0.5 <= opts.decrement_tol && rpri.lpNorm<Eigen::Infinity>() <= opts.eq_tol)
                break;

            // Line search: strict feasibility, then residual decrease.
            const double scale = std::max(1.0, t);
            auto merit = [&](const Eigen::VectorXd& zz, const Eigen::VectorXd& ww) {
                eval_center(r, t, zz, ws);
                Eigen::VectorXd rd = ws.grad;
                for (int k = 0; k < p; ++k)
                    for (const auto& [i, coef] : r.eq[k].terms) rd[i] += coef * ww[k];
                Eigen::VectorXd rp = eq_residual_vec(r, zz);
                return std::sqrt((rd / scale).squaredNorm() + rp.squaredNorm());
            };
            const double m0 = std::sqrt((rdual / scale).squaredNorm() + rpri.squaredNorm());
            double s = 1.0;
            while (s > 1e-14 && min_slack(r, z + s * dz) <= 0.0) s *= 0.5;
            bool accepted = false;
            while (s > 1e-14) {
                if (merit(z + s * dz, w + s * dw) <= (1.0 - 0.01 * s) * m0) {
                    accepted = true;
                    break;
                }
                s *= 0.5;
            }
            if (!accepted) break;  // stalled; move to next barrier stage or stop
            z += s * dz;
            w += s * dw;
        }
        if (pure_eq || r.m_bar / t <= opts.gap_tol) {
            converged = true;
            break;
        }
        t *= opts.t_mult;
    }

    // Assemble full solution.
    out.x.assign(prob.n, 0.0);
    for (int i = 0; i < prob.n; ++i) out.x[i] = (r.red[i] >= 0) ? z[r.red[i]] : r.fixed[i];
    out.objective = prob.objective_value(out.x);
    out.eq_dual.assign(prob.eq.size(), 0.0);
    for (int k = 0; k < p; ++k) out.eq_dual[r.eq[k].orig] = w[k] / t;
    out.gap = pure_eq ? 0.0 : r.m_bar / t;
    out.newton_steps = total_newton;
    {
        double m = 0.0;
        Eigen::VectorXd rp = eq_residual_vec(r, z);
        if (p > 0) m = rp.lpNorm<Eigen::Infinity>();
        out.eq_residual = m;
    }
    out.cone_residual.clear();
    for (const auto& c : prob.rcones) {
        const double x = out.x[c.ix], y = out.x[c.iy];
        out.cone_residual.push_back(x * x + y * y - out.x[c.iu] * out.x[c.iv]);
    }

    if (converged && out.eq_residual <= 1e-6) {
        out.status = SolveStatus::Optimal;
    } else if (out.eq_residual > 1e-6) {
        out.status = SolveStatus::Infeasible;
        out.message = "equality residual did not converge (infeasible or ill-posed)";
    } else {
        out.status = SolveStatus::MaxIterations;
        out.message = "barrier path did not reach gap tolerance";
    }
    return out;
}

}  // namespace tem::opt
