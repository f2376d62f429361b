#pragma once
// Barrier interior-point solver for convex programs of the form
//
//   min  sum_k w_k x_i x_j  +  c'x + c0
//   s.t. A x = b
//        lo <= x <= hi            (either side may be infinite; lo == hi fixes x)
//        g'x <= h                 (general linear rows)
//        x_a^2 + x_b^2 <= cap^2   (capped circle)
//        x_a^2 + x_b^2 <= x_u x_v (rotated second-order cone)
//
// Path-following with infeasible-start Newton centering; the barrier
// parameter shrinks by a fixed factor per outer step. Equality duals are
// returned for price extraction.

#include <limits>
#include <string>
#include <vector>

namespace tem::opt {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct QuadTerm {
    int i, j;  // contribution w * x_i * x_j (store each symmetric pair once)
    double w;
};

struct LinRow {
    std::vector<std::pair<int, double>> terms;
    double rhs = 0.0;
};

struct SocCap {
    int ix, iy;
    double cap;
};

struct RotatedCone {
    int ix, iy, iu, iv;  // x^2 + y^2 <= u*v
};

struct Problem {
    int n = 0;
    std::vector<QuadTerm> quad;
    std::vector<double> c;
    double c0 = 0.0;
    std::vector<double> lo, hi;
    std::vector<LinRow> eq;
    std::vector<LinRow> ineq;
    std::vector<SocCap> socs;
    std::vector<RotatedCone> rcones;

    explicit Problem(int nvars = 0) { resize(nvars); }
    void resize(int nvars) {
        n = nvars;
        c.assign(n, 0.0);
        lo.assign(n, -kInf);
        hi.assign(n, kInf);
    }
    void add_quad(int i, int j, double w) {
        if (w != 0.0) quad.push_back({i, j, w});
    }
    // Adds w * (g'x - rhs)^2 expanded into quadratic/linear/constant parts.
    void add_squared_row(const std::vector<std::pair<int, double>>& terms, double rhs, double w);
    double objective_value(const std::vector<double>& x) const;
};

enum class SolveStatus { Optimal, Infeasible, MaxIterations, NumericalFailure };

struct Options {
    double t0 = 1.0;
    double t_mult = 5.0;       // barrier parameter mu shrinks by 1/t_mult per outer step
    double gap_tol = 1e-9;     // absolute duality-gap target
    double eq_tol = 1e-10;
    double decrement_tol = 1e-12;
    int max_outer = 80;
    int max_inner = 60;
};

struct Result {
    SolveStatus status = SolveStatus::NumericalFailure;
    std::vector<double> x;        // full-length primal
    std::vector<double> eq_dual;  // per eq row; rows eliminated in presolve get 0
    double objective = 0.0;
    double gap = 0.0;           // final barrier gap estimate
    double eq_residual = 0.0;   // ||Ax - b||_inf
    int newton_steps = 0;
    std::string message;
    std::vector<double> cone_residual;  // per rotated cone: x^2+y^2 - u*v
};

// x0 must be strictly inside boxes/cones (small violations are repaired:
// box clamping, minimal cone inflation). Equality residuals in x0 are fine.
Result solve(const Problem& prob, std::vector<double> x0, const Options& opts = {});

}  // namespace tem::opt
