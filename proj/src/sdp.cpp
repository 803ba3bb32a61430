#include "drfd/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace drfd {

void MatExpr::add_entry(int var, int r, int c, double val) {
    if (r < 0 || c < 0 || r >= dim || c >= dim)
        throw InvalidProblem("MatExpr::add_entry: index out of range in block " + name);
    if (val == 0.0) return;
    terms.push_back({var, r, c, val});
    if (r != c) terms.push_back({var, c, r, val});
}

void MatExpr::add_const(const Matrix& m, int off) {
    if (off + m.rows() > dim || m.rows() != m.cols())
        throw InvalidProblem("MatExpr::add_const: bad placement in block " + name);
    f0.block(off, off, m.rows(), m.cols()) += m;
}

void MatExpr::add_sym_var(const SymVarHandle& h, int off, double scale) {
    if (off + h.dim > dim)
        throw InvalidProblem("MatExpr::add_sym_var: bad placement in block " + name);
    for (int j = 0; j < h.dim; ++j)
        for (int i = 0; i <= j; ++i)
            add_entry(h.index(i, j), off + i, off + j, scale);
}

void MatExpr::add_weighted_sym(const SymVarHandle& h, const Matrix& coeff, int r, int c,
                               double scale) {
    if (coeff.rows() != h.dim || coeff.cols() != h.dim)
        throw InvalidProblem("MatExpr::add_weighted_sym: coeff dimension mismatch");
    for (int j = 0; j < h.dim; ++j)
        for (int i = 0; i <= j; ++i) {
            const double w = (i == j) ? coeff(i, i) : coeff(i, j) + coeff(j, i);
            add_entry(h.index(i, j), r, c, scale * w);
        }
}

void MatExpr::add_vec_var(int start, int len, int row_off, int col, double scale) {
    for (int i = 0; i < len; ++i) add_entry(start + i, row_off + i, col, scale);
}

Matrix MatExpr::eval(const Vector& x) const {
    Matrix m = f0;
    for (const auto& t : terms) m(t.r, t.c) += t.val * x(t.var);
    return m;
}

Matrix SdpSolution::sym(const SymVarHandle& h) const {
    Matrix m(h.dim, h.dim);
    for (int j = 0; j < h.dim; ++j)
        for (int i = 0; i <= j; ++i) m(i, j) = m(j, i) = x(h.index(i, j));
    return m;
}

int SdpProblem::add_scalar(const std::string& name) {
    var_names_.push_back(name);
    return num_vars_++;
}

SymVarHandle SdpProblem::add_sym(const std::string& name, int dim) {
    SymVarHandle h{num_vars_, dim};
    for (int j = 0; j < dim; ++j)
        for (int i = 0; i <= j; ++i)
            var_names_.push_back(name + "(" + std::to_string(i) + "," + std::to_string(j) + ")");
    num_vars_ += h.count();
    return h;
}

MatExpr& SdpProblem::add_block(int dim, const std::string& name) {
    MatExpr e;
    e.dim = dim;
    e.f0 = Matrix::Zero(dim, dim);
    e.name = name;
    blocks_.push_back(std::move(e));
    return blocks_.back();
}

MatExpr& SdpProblem::add_scalar_block(const std::string& name) { return add_block(1, name); }

void SdpProblem::set_objective(Vector c, double constant, bool maximize) {
    if (c.size() != num_vars_)
        throw InvalidProblem("set_objective: coefficient size mismatch");
    c_ = std::move(c);
    c0_ = constant;
    maximize_ = maximize;
}

std::string SdpProblem::dump() const {
    std::ostringstream os;
    os << (maximize_ ? "maximize" : "minimize") << " c^T x + " << c0_ << "\n";
    os << "variables (" << num_vars_ << "):\n";
    for (int i = 0; i < num_vars_; ++i) {
        os << "  x[" << i << "] = " << var_names_[i];
        if (c_.size() == num_vars_ && c_(i) != 0.0) os << "   c = " << c_(i);
        os << "\n";
    }
    for (const auto& b : blocks_) {
        os << "block '" << b.name << "' dim " << b.dim << " : F0 =\n" << b.f0 << "\n";
        for (const auto& t : b.terms)
            os << "  + " << t.val << " * x[" << t.var << "] @(" << t.r << "," << t.c << ")\n";
    }
    return os.str();
}

namespace {

struct BlockWork {
    const MatExpr* expr;
    std::vector<int> vars;    // participating global var ids
    std::vector<Matrix> fi;   // dense coefficient matrix per var
    Matrix S, Z, Rd, Sinv;
};

Matrix hsym(const Matrix& m) { return 0.5 * (m + m.transpose()); }

/// Largest step a in (0, inf] with X + a*dX remaining PD; X must be PD.
double max_step(const Matrix& X, const Matrix& dX) {
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(-hsym(dX), X, Eigen::EigenvaluesOnly);
    const double lmax = ges.eigenvalues().maxCoeff();
    if (lmax <= 0.0) return std::numeric_limits<double>::infinity();
    return 1.0 / lmax;
}

}  // namespace

SdpSolution solve_sdp(const SdpProblem& problem, double tol) {
    const int m = problem.num_vars();
    if (m == 0) throw InvalidProblem("solve_sdp: no variables");
    if (problem.blocks().empty()) throw InvalidProblem("solve_sdp: no constraints");
    Vector chat = problem.objective_coeffs().size() == m
                      ? Vector(problem.objective_coeffs())
                      : Vector(Vector::Zero(m));
    if (problem.maximize()) chat = -chat;

    // Assemble dense per-block coefficient matrices.
    std::vector<BlockWork> work;
    std::vector<char> var_used(m, 0);
    for (const auto& b : problem.blocks()) {
        BlockWork w;
        w.expr = &b;
        std::vector<int> local(m, -1);
        for (const auto& t : b.terms) {
            if (t.var < 0 || t.var >= m)
                throw InvalidProblem("solve_sdp: term references unknown variable");
            if (local[t.var] < 0) {
                local[t.var] = static_cast<int>(w.vars.size());
                w.vars.push_back(t.var);
                w.fi.push_back(Matrix::Zero(b.dim, b.dim));
                var_used[t.var] = 1;
            }
            w.fi[local[t.var]](t.r, t.c) += t.val;
        }
        work.push_back(std::move(w));
    }
    for (int i = 0; i < m; ++i)
        if (!var_used[i]) throw InvalidProblem("solve_sdp: variable appears in no block");

    double f0_scale = 1.0;
    int total_dim = 0;
    for (auto& w : work) {
        f0_scale = std::max(f0_scale, w.expr->f0.cwiseAbs().maxCoeff());
        total_dim += w.expr->dim;
    }

    // Infeasible start.
    Vector x = Vector::Zero(m);
    const double s_init = 1.5 * f0_scale + 1.0;
    const double z_init = std::max(1.0, chat.cwiseAbs().maxCoeff());
    for (auto& w : work) {
        w.S = s_init * Matrix::Identity(w.expr->dim, w.expr->dim);
        w.Z = z_init * Matrix::Identity(w.expr->dim, w.expr->dim);
    }

    SdpSolution sol;
    sol.x = x;
    const int max_iter = 200;
    int stall = 0;
    double best_err = std::numeric_limits<double>::infinity();

    for (int iter = 1; iter <= max_iter; ++iter) {
        // Residuals.
        Vector rp = chat;
        double rd_norm = 0.0, gap = 0.0, dobj = 0.0;
        for (auto& w : work) {
            Matrix Fx = w.expr->eval(x);
            w.Rd = Fx - w.S;
            rd_norm = std::max(rd_norm, w.Rd.cwiseAbs().maxCoeff());
            gap += w.S.cwiseProduct(w.Z).sum();
            dobj -= w.expr->f0.cwiseProduct(w.Z).sum();
            for (size_t a = 0; a < w.vars.size(); ++a)
                rp(w.vars[a]) -= w.fi[a].cwiseProduct(w.Z).sum();
        }
        const double pobj = chat.dot(x);
        const double rel_rp = rp.cwiseAbs().maxCoeff() / (1.0 + chat.cwiseAbs().maxCoeff());
        const double rel_rd = rd_norm / (1.0 + f0_scale);
        const double rel_gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));

        sol.x = x;
        sol.kkt = {rel_rp, rel_rd, rel_gap};
        sol.iterations = iter - 1;
        if (rel_rp <= tol && rel_rd <= tol && rel_gap <= tol) {
            sol.status = SdpSolution::Status::Optimal;
            break;
        }
        const double err = rel_rp + rel_rd + rel_gap;
        if (err < best_err - 1e-16) {
            best_err = err;
            stall = 0;
        } else if (++stall > 12) {
            sol.status = (rel_rp <= 1e-7 && rel_rd <= 1e-7 && rel_gap <= 1e-7)
                             ? SdpSolution::Status::Optimal
                             : SdpSolution::Status::NumericalTrouble;
            sol.diagnostics = "stalled at iteration " + std::to_string(iter);
            break;
        }
        if (x.cwiseAbs().maxCoeff() > 1e12) {
            sol.status = SdpSolution::Status::Unbounded;
            sol.diagnostics = "iterates diverged";
            break;
        }
        double zmax = 0.0;
        for (auto& w : work) zmax = std::max(zmax, w.Z.cwiseAbs().maxCoeff());
        if (zmax > 1e13) {
            sol.status = SdpSolution::Status::Infeasible;
            sol.diagnostics = "dual iterates diverged";
            break;
        }
        if (iter == max_iter) {
            sol.status = SdpSolution::Status::NumericalTrouble;
            sol.diagnostics = "iteration limit";
            break;
        }

        const double mu = gap / total_dim;

        // Schur complement assembly (HKM direction, symmetrized).
        Matrix M = Matrix::Zero(m, m);
        Vector h1 = Vector::Zero(m);  // coefficient of sigma*mu
        Vector h2 = Vector::Zero(m);
        Vector h3 = Vector::Zero(m);
        std::vector<std::vector<Matrix>> G(work.size());
        for (size_t k = 0; k < work.size(); ++k) {
            auto& w = work[k];
            Eigen::LLT<Matrix> llt(w.S);
            if (llt.info() != Eigen::Success) {
                // cannot iterate further; accept the last iterate if it is
                // already accurate enough
                sol.status = (sol.kkt.primal_residual <= 1e-7 &&
                              sol.kkt.dual_residual <= 1e-7 &&
                              sol.kkt.duality_gap <= 1e-7)
                                 ? SdpSolution::Status::Optimal
                                 : SdpSolution::Status::NumericalTrouble;
                sol.diagnostics = "slack lost definiteness";
                const double raw0 = chat.dot(sol.x);
                sol.objective =
                    (problem.maximize() ? -raw0 : raw0) + problem.objective_constant();
                return sol;
            }
            w.Sinv = llt.solve(Matrix::Identity(w.expr->dim, w.expr->dim));
            G[k].resize(w.vars.size());
            for (size_t a = 0; a < w.vars.size(); ++a) {
                G[k][a] = hsym(w.Sinv * w.fi[a] * w.Z);
                const int va = w.vars[a];
                h1(va) += w.fi[a].cwiseProduct(w.Sinv).sum();
                h2(va) += w.fi[a].cwiseProduct(w.Z).sum();
                h3(va) += G[k][a].cwiseProduct(w.Rd).sum();
            }
            for (size_t a = 0; a < w.vars.size(); ++a)
                for (size_t b = 0; b < w.vars.size(); ++b)
                    M(w.vars[a], w.vars[b]) += G[k][a].cwiseProduct(w.fi[b]).sum();
        }
        M = hsym(M);

        auto solve_newton = [&](const Vector& rhs) -> Vector {
            Matrix Mr = M;
            double ridge = 1e-14 * (1.0 + M.trace() / m);
            for (int attempt = 0; attempt < 6; ++attempt) {
                Eigen::LDLT<Matrix> ldlt(Mr);
                if (ldlt.info() == Eigen::Success) {
                    Vector dx = ldlt.solve(rhs);
                    if (dx.allFinite()) return dx;
                }
                Mr = M + ridge * Matrix::Identity(m, m);
                ridge *= 100.0;
            }
            throw SolverError("solve_sdp: Schur system unsolvable", "NumericalTrouble");
        };

        // Predictor (affine direction).
        Vector rhs_aff = -h2 - h3 - rp;
        Vector dx_aff = solve_newton(rhs_aff);
        std::vector<Matrix> dS_aff(work.size()), dZ_aff(work.size());
        double ap_aff = 1.0, ad_aff = 1.0;
        for (size_t k = 0; k < work.size(); ++k) {
            auto& w = work[k];
            Matrix dS = w.Rd;
            for (size_t a = 0; a < w.vars.size(); ++a) dS += dx_aff(w.vars[a]) * w.fi[a];
            Matrix dZ = -w.Z - hsym(w.Z * dS * w.Sinv);
            ap_aff = std::min(ap_aff, 0.98 * max_step(w.S, dS));
            ad_aff = std::min(ad_aff, 0.98 * max_step(w.Z, dZ));
            dS_aff[k] = std::move(dS);
            dZ_aff[k] = std::move(dZ);
        }
        double gap_aff = 0.0;
        for (size_t k = 0; k < work.size(); ++k)
            gap_aff += (work[k].S + ap_aff * dS_aff[k])
                           .cwiseProduct(work[k].Z + ad_aff * dZ_aff[k])
                           .sum();
        gap_aff = std::max(gap_aff, 0.0);
        double sigma = std::pow(gap_aff / std::max(gap, 1e-300), 3.0);
        sigma = std::clamp(sigma, 1e-8, 1.0);

        // Corrector.
        Vector rhs = sigma * mu * h1 - h2 - h3 - rp;
        std::vector<Matrix> corr(work.size());
        for (size_t k = 0; k < work.size(); ++k) {
            auto& w = work[k];
            corr[k] = hsym(dZ_aff[k] * dS_aff[k] * w.Sinv);
            for (size_t a = 0; a < w.vars.size(); ++a)
                rhs(w.vars[a]) -= w.fi[a].cwiseProduct(corr[k]).sum();
        }
        Vector dx = solve_newton(rhs);
        double ap = 1.0, ad = 1.0;
        std::vector<Matrix> dS(work.size()), dZ(work.size());
        for (size_t k = 0; k < work.size(); ++k) {
            auto& w = work[k];
            Matrix dSk = w.Rd;
            for (size_t a = 0; a < w.vars.size(); ++a) dSk += dx(w.vars[a]) * w.fi[a];
            Matrix dZk = sigma * mu * w.Sinv - w.Z - hsym(w.Z * dSk * w.Sinv) - corr[k];
            ap = std::min(ap, 0.98 * max_step(w.S, dSk));
            ad = std::min(ad, 0.98 * max_step(w.Z, dZk));
            dS[k] = std::move(dSk);
            dZ[k] = std::move(dZk);
        }
        x += ap * dx;
        for (size_t k = 0; k < work.size(); ++k) {
            work[k].S += ap * dS[k];
            work[k].Z += ad * dZ[k];
        }
    }

    const double raw = chat.dot(sol.x);
    sol.objective = (problem.maximize() ? -raw : raw) + problem.objective_constant();
    return sol;
}

SdpSolution maxdet_iterate(const SdpProblem& problem, const MatExpr& logdet_arg,
                           const Matrix& k_init, double tol) {
    if (!problem.maximize())
        throw InvalidProblem("maxdet_iterate: objective sense must be maximize");
    SdpProblem prob = problem;
    const Vector c_base = problem.objective_coeffs().size() == problem.num_vars()
                              ? Vector(problem.objective_coeffs())
                              : Vector(Vector::Zero(problem.num_vars()));

    auto logdet_of = [&](const Matrix& K) -> double {
        Eigen::SelfAdjointEigenSolver<Matrix> es(hsym(K), Eigen::EigenvaluesOnly);
        double v = 0.0;
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
            const double l = es.eigenvalues()(i);
            if (l <= 0.0) return -std::numeric_limits<double>::infinity();
            v += std::log(l);
        }
        return v;
    };
    auto phi = [&](const Vector& x) {
        return c_base.dot(x) + problem.objective_constant() + logdet_of(logdet_arg.eval(x));
    };

    std::string diag;
    auto inverse_of = [&](Matrix K) -> Matrix {
        Eigen::LDLT<Matrix> ldlt(hsym(K));
        Matrix inv;
        if (ldlt.info() == Eigen::Success) {
            inv = ldlt.solve(Matrix::Identity(K.rows(), K.cols()));
            Eigen::SelfAdjointEigenSolver<Matrix> es(hsym(K), Eigen::EigenvaluesOnly);
            if (es.eigenvalues().minCoeff() > 1e-12 * std::max(1.0, es.eigenvalues().maxCoeff()))
                return hsym(inv);
        }
        diag += "singular log-det iterate regularized; ";
        Matrix Kr = hsym(K) + 1e-9 * Matrix::Identity(K.rows(), K.cols());
        return hsym(Kr.ldlt().solve(Matrix::Identity(K.rows(), K.cols())));
    };

    Matrix G = inverse_of(k_init);
    Vector x_cur;
    double phi_cur = -std::numeric_limits<double>::infinity();
    SdpSolution last;
    const int max_outer = 60;
    for (int it = 0; it < max_outer; ++it) {
        Vector c = c_base;
        for (const auto& t : logdet_arg.terms) c(t.var) += t.val * G(t.r, t.c);
        // The linearized gradient can be huge near a barely-definite iterate;
        // normalizing the objective (which does not move the argmax) keeps the
        // inner solver's divergence heuristics meaningful.
        const double c_scale = std::max(1.0, c.cwiseAbs().maxCoeff());
        prob.set_objective(c / c_scale, 0.0, true);
        SdpSolution s = solve_sdp(prob, 1e-9);
        if (s.status != SdpSolution::Status::Optimal &&
            s.status != SdpSolution::Status::NumericalTrouble) {
            if (x_cur.size()) {
                // Keep the best accepted iterate instead of discarding the run.
                diag += "inner solve failed (" + s.diagnostics + "); ";
                break;
            }
            s.diagnostics = diag + s.diagnostics;
            return s;
        }
        Vector x_new = s.x;
        double phi_new = phi(x_new);
        if (x_cur.size()) {
            // Monotone safeguard: back off along the segment if needed.
            double t_step = 1.0;
            while (phi_new < phi_cur && t_step > 1e-6) {
                t_step *= 0.5;
                x_new = x_cur + t_step * (s.x - x_cur);
                phi_new = phi(x_new);
            }
            if (phi_new < phi_cur) {
                x_new = x_cur;
                phi_new = phi_cur;
            }
        }
        last = s;
        const bool converged = x_cur.size() && std::abs(phi_new - phi_cur) <= tol;
        x_cur = x_new;
        phi_cur = phi_new;
        last.x = x_cur;
        if (converged) break;
        G = inverse_of(logdet_arg.eval(x_cur));
    }
    last.objective = phi_cur;
    last.diagnostics = diag + last.diagnostics;
    return last;
}

}  // namespace drfd
