#include "bellbound/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <cblas.h>
#include <lapacke.h>

namespace bellbound::sdp {

void ConstraintMat::add(int block, int i, int j, cxd v) {
  if (i < j) {
    std::swap(i, j);
    v = std::conj(v);
  }
  for (auto& ch : chunks) {
    if (ch.block == block) {
      ch.entries.push_back({i, j, v});
      return;
    }
  }
  chunks.push_back({block, {{i, j, v}}});
}

Mat ConstraintMat::dense(int block, int dim) const {
  Mat m = Mat::Zero(dim, dim);
  for (const auto& ch : chunks) {
    if (ch.block != block) continue;
    for (const auto& e : ch.entries) {
      m(e.i, e.j) += e.v;
      if (e.i != e.j) m(e.j, e.i) += std::conj(e.v);
    }
  }
  return m;
}

int SdpStandard::total_dim() const {
  int n = 0;
  for (const auto& b : blocks) n += b.dim;
  return n;
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::MaxIterations: return "max-iterations";
  }
  return "unknown";
}

namespace {

// Entry with both triangles expanded, for the sparse Schur formula.
struct FullEntry {
  int i, j;
  cxd v;
};

struct ConsData {
  // per block: consolidated entries (lower triangle) and expanded entries
  std::vector<int> block_ids;
  std::vector<std::vector<Entry>> lower;
  std::vector<std::vector<FullEntry>> full;
  int nnz_full = 0;
};

ConsData compile(const ConstraintMat& cm) {
  ConsData d;
  for (const auto& ch : cm.chunks) {
    std::vector<Entry> low = ch.entries;
    std::vector<FullEntry> full;
    full.reserve(2 * low.size());
    for (const auto& e : low) {
      full.push_back({e.i, e.j, e.v});
      if (e.i != e.j) full.push_back({e.j, e.i, std::conj(e.v)});
    }
    d.block_ids.push_back(ch.block);
    d.lower.push_back(std::move(low));
    d.full.push_back(std::move(full));
  }
  for (const auto& f : d.full) d.nnz_full += static_cast<int>(f.size());
  return d;
}

// Cholesky of a dense real SPD matrix, LAPACK-backed above a size threshold.
class RealChol {
 public:
  bool factor(RMat m) {
    n_ = static_cast<int>(m.rows());
    l_ = std::move(m);
    if (n_ >= 320) {
      return LAPACKE_dpotrf(LAPACK_COL_MAJOR, 'L', n_, l_.data(), n_) == 0;
    }
    Eigen::LLT<Eigen::Ref<RMat>> llt(l_);
    return llt.info() == Eigen::Success;
  }
  // In-place solve L L^T X = B.
  void solve(RMat& b) const {
    const int nrhs = static_cast<int>(b.cols());
    if (n_ >= 320) {
      cblas_dtrsm(CblasColMajor, CblasLeft, CblasLower, CblasNoTrans, CblasNonUnit,
                  n_, nrhs, 1.0, l_.data(), n_, b.data(), n_);
      cblas_dtrsm(CblasColMajor, CblasLeft, CblasLower, CblasTrans, CblasNonUnit,
                  n_, nrhs, 1.0, l_.data(), n_, b.data(), n_);
    } else {
      l_.triangularView<Eigen::Lower>().solveInPlace(b);
      l_.triangularView<Eigen::Lower>().transpose().solveInPlace(b);
    }
  }
  void solve_lower(RMat& b) const {  // L X = B only
    const int nrhs = static_cast<int>(b.cols());
    if (n_ >= 320) {
      cblas_dtrsm(CblasColMajor, CblasLeft, CblasLower, CblasNoTrans, CblasNonUnit,
                  n_, nrhs, 1.0, l_.data(), n_, b.data(), n_);
    } else {
      l_.triangularView<Eigen::Lower>().solveInPlace(b);
    }
  }
  void solve_lower_t(RMat& b) const {  // L^T X = B only
    const int nrhs = static_cast<int>(b.cols());
    if (n_ >= 320) {
      cblas_dtrsm(CblasColMajor, CblasLeft, CblasLower, CblasTrans, CblasNonUnit,
                  n_, nrhs, 1.0, l_.data(), n_, b.data(), n_);
    } else {
      l_.triangularView<Eigen::Lower>().transpose().solveInPlace(b);
    }
  }

 private:
  int n_ = 0;
  RMat l_;
};

template <typename Sc>
struct ScTraits;

template <>
struct ScTraits<double> {
  static double from(cxd v) { return v.real(); }
  static double conj(double v) { return v; }
  static double re(double v) { return v; }
};

template <>
struct ScTraits<cxd> {
  static cxd from(cxd v) { return v; }
  static cxd conj(cxd v) { return std::conj(v); }
  static double re(cxd v) { return v.real(); }
};

template <typename Sc>
class Engine {
  using MatT = Eigen::Matrix<Sc, Eigen::Dynamic, Eigen::Dynamic>;
  using Tr = ScTraits<Sc>;

 public:
  Engine(const SdpStandard& p, const SolveOptions& opts) : p_(p), opts_(opts) {
    nb_ = static_cast<int>(p.blocks.size());
    m_ = static_cast<int>(p.f.size());
    pfree_ = static_cast<int>(p.free_c.cols());
    dims_.resize(nb_);
    ntot_ = 0;
    for (int b = 0; b < nb_; ++b) {
      dims_[b] = p.blocks[b].dim;
      ntot_ += dims_[b];
    }
    f0_ = compile(p.f0);
    fs_.reserve(m_);
    int nnz_sum = 0, nnz_max = 0;
    for (const auto& cm : p.f) {
      fs_.push_back(compile(cm));
      nnz_sum += fs_.back().nnz_full;
      nnz_max = std::max(nnz_max, fs_.back().nnz_full);
    }
    blk_cons_.assign(nb_, {});
    for (int i = 0; i < m_; ++i)
      for (int bi = 0; bi < static_cast<int>(fs_[i].block_ids.size()); ++bi)
        blk_cons_[fs_[i].block_ids[bi]].push_back({i, bi});
    // Schur assembly strategy: entry-by-entry products when constraints are
    // uniformly very sparse and numerous, cached S^-1 F Z otherwise.
    size_t cache_bytes = 0;
    for (int b = 0; b < nb_; ++b)
      cache_bytes += blk_cons_[b].size() * sizeof(Sc) * dims_[b] * dims_[b];
    sparse_schur_ = (nnz_max <= 24 && m_ >= 512) || cache_bytes > size_t(500) * 1024 * 1024;
    if (pfree_ > 0) cdense_ = RMat(p.free_c);
    data_scale_ = 1.0;
    for (const auto& fl : f0_.full)
      for (const auto& e : fl) data_scale_ = std::max(data_scale_, std::abs(e.v));
  }

  SdpSolution run() {
    init_point();
    SdpSolution best;
    double best_merit = std::numeric_limits<double>::infinity();
    int slow_steps = 0, stalled = 0;
    bool done = false;
    for (iter_ = 0; iter_ < opts_.max_iter && !done; ++iter_) {
      compute_residuals();
      if (opts_.verbose)
        std::fprintf(stderr, "it %3d pobj % .8e dobj % .8e pres %.2e dres %.2e gap %.2e step %.2e\n",
                     iter_, pobj_, dobj_, pres_, dres_, gap_, last_step_);
      const SdpSolution cur = snapshot();
      const double merit = cur.primal_residual + cur.dual_residual + cur.duality_gap;
      if (merit < 0.99 * best_merit) stalled = 0; else ++stalled;
      if (merit < best_merit) {
        best_merit = merit;
        best = cur;
      }
      if (cur.primal_residual <= opts_.tol && cur.dual_residual <= opts_.tol &&
          cur.duality_gap <= opts_.tol) {
        best = cur;
        best.status = SolveStatus::Optimal;
        return best;
      }
      // Divergence heuristics (conservative): runaway objective with
      // vanishing steps means the other side of the pair is infeasible.
      if (iter_ > 8 && last_step_ < 1e-4) ++slow_steps; else slow_steps = 0;
      if (slow_steps >= 5 || std::abs(dobj_) > 1e10 || std::abs(pobj_) > 1e10) {
        if (dobj_ < -1e9) { best.status = SolveStatus::Infeasible; return best; }
        if (pobj_ > 1e9) { best.status = SolveStatus::Unbounded; return best; }
        if (slow_steps >= 5) done = true;
      }
      if (stalled >= 40) done = true;  // rattling near the optimum, stop wasting work
      if (!done && !iterate()) done = true;
    }
    if (!done) {
      compute_residuals();
      const SdpSolution cur = snapshot();
      const double merit = cur.primal_residual + cur.dual_residual + cur.duality_gap;
      if (merit < best_merit) best = cur;
    }
    polish_primal(best);
    if (best.primal_residual <= opts_.tol && best.dual_residual <= opts_.tol &&
        best.duality_gap <= opts_.tol)
      best.status = SolveStatus::Optimal;
    return best;
  }

  // Least-norm correction of (Z, x) onto the affine constraint set. The
  // interior-point endgame can leave the primal residual a digit or two above
  // tolerance while the gap is already tight; this removes that residual and
  // re-verifies everything from scratch.
  void polish_primal(SdpSolution& sol) {
    if (m_ == 0 || sol.primal_residual <= opts_.tol ||
        sol.duality_gap > 1e3 * opts_.tol || sol.primal_residual > 1e5 * opts_.tol)
      return;
    // Gram of the constraint family under the real inner product.
    RMat gram = RMat::Zero(m_, m_);
    for (int b = 0; b < nb_; ++b) {
      for (const auto& [i, ki] : blk_cons_[b])
        for (const auto& [j, kj] : blk_cons_[b]) {
          if (j > i) continue;
          double acc = 0.0;
          for (const auto& ei : fs_[i].full[ki])
            for (const auto& ej : fs_[j].full[kj])
              if (ei.i == ej.i && ei.j == ej.j) acc += (ei.v * std::conj(ej.v)).real();
          gram(i, j) += acc;
        }
    }
    gram = gram.selfadjointView<Eigen::Lower>();
    if (pfree_ > 0) gram += cdense_ * cdense_.transpose();
    gram.diagonal().array() += 1e-12 * std::max(1.0, gram.diagonal().maxCoeff());
    Eigen::LLT<RMat> llt(gram);
    if (llt.info() != Eigen::Success) return;

    RVec rp(m_);
    for (int i = 0; i < m_; ++i) {
      double az = 0.0;
      for (size_t k = 0; k < fs_[i].block_ids.size(); ++k)
        for (const auto& e : fs_[i].full[k])
          az += (e.v * sol.z[fs_[i].block_ids[k]](e.j, e.i)).real();
      rp(i) = p_.c(i) - az;
    }
    if (pfree_ > 0) rp -= cdense_ * sol.xfree;
    const RVec wv = llt.solve(rp);
    std::vector<Mat> z = sol.z;
    for (int i = 0; i < m_; ++i)
      for (size_t k = 0; k < fs_[i].block_ids.size(); ++k)
        for (const auto& e : fs_[i].full[k])
          z[fs_[i].block_ids[k]](e.i, e.j) += wv(i) * e.v;
    RVec xf = sol.xfree;
    if (pfree_ > 0) xf += cdense_.transpose() * wv;

    // Recompute certificates for the corrected point.
    RVec az2(m_);
    for (int i = 0; i < m_; ++i) {
      double acc = 0.0;
      for (size_t k = 0; k < fs_[i].block_ids.size(); ++k)
        for (const auto& e : fs_[i].full[k])
          acc += (e.v * z[fs_[i].block_ids[k]](e.j, e.i)).real();
      az2(i) = acc;
    }
    RVec rp2 = p_.c - az2;
    if (pfree_ > 0) rp2 -= cdense_ * xf;
    const double pres2 = rp2.cwiseAbs().maxCoeff() / (1.0 + p_.c.cwiseAbs().maxCoeff());
    if (pres2 >= sol.primal_residual) return;
    double pobj2 = 0.0;
    for (size_t k = 0; k < f0_.block_ids.size(); ++k)
      for (const auto& e : f0_.full[k])
        pobj2 -= (e.v * z[f0_.block_ids[k]](e.j, e.i)).real();
    if (pfree_ > 0) pobj2 -= p_.free_f.dot(xf);
    sol.z = std::move(z);
    sol.xfree = std::move(xf);
    sol.primal_residual = pres2;
    sol.primal_objective = pobj2;
    sol.objective = pobj2;
    sol.duality_gap = std::abs(pobj2 - sol.dual_objective) / (1.0 + std::abs(pobj2));
  }

 private:
  void init_point() {
    z_.resize(nb_);
    s_.resize(nb_);
    double fnorm = 1.0;
    for (const auto& cd : fs_)
      for (const auto& fl : cd.full)
        for (const auto& e : fl) fnorm = std::max(fnorm, std::abs(e.v));
    for (const auto& fl : f0_.full)
      for (const auto& e : fl) fnorm = std::max(fnorm, std::abs(e.v));
    double cnorm = m_ ? p_.c.cwiseAbs().maxCoeff() : 0.0;
    const double zeta = std::max({10.0, std::sqrt(double(ntot_)), cnorm / fnorm});
    const double eta = std::max({10.0, std::sqrt(double(ntot_)), fnorm});
    for (int b = 0; b < nb_; ++b) {
      z_[b] = MatT::Identity(dims_[b], dims_[b]) * Sc(zeta);
      s_[b] = MatT::Identity(dims_[b], dims_[b]) * Sc(eta);
    }
    y_ = RVec::Zero(m_);
    x_ = RVec::Zero(pfree_);
    last_step_ = 1.0;
  }

  // F-matrix times engine scalar: dense accumulation into a block matrix.
  void accumulate(const ConsData& cd, double w, std::vector<MatT>& into) const {
    for (size_t k = 0; k < cd.block_ids.size(); ++k) {
      MatT& m = into[cd.block_ids[k]];
      for (const auto& e : cd.full[k]) m(e.i, e.j) += Sc(w) * Tr::from(e.v);
    }
  }

  double inner_blocks(const ConsData& cd, const std::vector<MatT>& mats) const {
    // Re tr(F M) over shared blocks
    double acc = 0.0;
    for (size_t k = 0; k < cd.block_ids.size(); ++k) {
      const MatT& m = mats[cd.block_ids[k]];
      for (const auto& e : cd.full[k]) acc += Tr::re(Tr::from(e.v) * m(e.j, e.i));
    }
    return acc;
  }

  void compute_residuals() {
    // residual matrices R_d = F0 + sum y_m F_m - S
    rd_.assign(nb_, MatT());
    for (int b = 0; b < nb_; ++b) rd_[b] = MatT::Zero(dims_[b], dims_[b]);
    accumulate(f0_, 1.0, rd_);
    for (int i = 0; i < m_; ++i) accumulate(fs_[i], y_(i), rd_);
    for (int b = 0; b < nb_; ++b) rd_[b] -= s_[b];

    az_.resize(m_);
    for (int i = 0; i < m_; ++i) az_(i) = inner_blocks(fs_[i], z_);
    rp_ = p_.c - az_;
    if (pfree_ > 0) rp_ -= cdense_ * x_;

    pobj_ = -inner_blocks(f0_, z_);
    if (pfree_ > 0) pobj_ -= p_.free_f.dot(x_);
    dobj_ = m_ ? p_.c.dot(y_) : 0.0;

    double rd_norm = 0.0, s_scale = 1.0;
    for (int b = 0; b < nb_; ++b) {
      rd_norm = std::max(rd_norm, rd_[b].cwiseAbs().maxCoeff());
      s_scale = std::max(s_scale, 1.0);
    }
    double fd_norm = 0.0;
    if (pfree_ > 0)
      fd_norm = (cdense_.transpose() * y_ + p_.free_f).cwiseAbs().maxCoeff() /
                (1.0 + p_.free_f.cwiseAbs().maxCoeff());
    pres_ = m_ ? rp_.cwiseAbs().maxCoeff() / (1.0 + p_.c.cwiseAbs().maxCoeff()) : 0.0;
    dres_ = std::max(rd_norm / (1.0 + data_scale_), fd_norm);
    gap_ = std::abs(pobj_ - dobj_) / (1.0 + std::abs(pobj_));
  }

  SdpSolution snapshot() const {
    SdpSolution out;
    out.status = SolveStatus::MaxIterations;
    out.primal_objective = pobj_;
    out.dual_objective = dobj_;
    out.objective = pobj_;
    out.z.resize(nb_);
    for (int b = 0; b < nb_; ++b) out.z[b] = z_[b].template cast<cxd>();
    out.y = y_;
    out.xfree = x_;
    out.primal_residual = pres_;
    out.dual_residual = dres_;
    out.duality_gap = gap_;
    out.iterations = iter_;
    return out;
  }

  // One Mehrotra predictor-corrector iteration. Returns false on a fatal
  // numerical failure (non-factorizable Schur complement after regularizing).
  bool iterate() {
    // Factor S and Z blockwise; form dense S^-1. A failed factorization at
    // the endgame gets a tiny diagonal lift before giving up.
    std::vector<MatT> sinv(nb_);
    std::vector<Eigen::LLT<MatT>> slt(nb_), zlt(nb_);
    for (int b = 0; b < nb_; ++b) {
      auto lift = [&](std::vector<MatT>& mats, Eigen::LLT<MatT>& llt) {
        llt.compute(mats[b]);
        for (int tries = 0; tries < 3 && llt.info() != Eigen::Success; ++tries) {
          const double tau = std::max(1e-14 * std::abs(Tr::re(mats[b].trace())) / dims_[b], 1e-15)
                             * std::pow(100.0, tries);
          mats[b] += tau * MatT::Identity(dims_[b], dims_[b]);
          llt.compute(mats[b]);
        }
        return llt.info() == Eigen::Success;
      };
      if (!lift(s_, slt[b]) || !lift(z_, zlt[b])) return false;
      sinv[b] = slt[b].solve(MatT::Identity(dims_[b], dims_[b]));
    }

    schur_ = assemble_schur(sinv);
    RVec h(m_), g(m_);
    std::vector<MatT> u(nb_);  // S^-1 R_d Z
    for (int b = 0; b < nb_; ++b) u[b] = sinv[b] * rd_[b] * z_[b];
    for (int i = 0; i < m_; ++i) {
      h(i) = inner_blocks(fs_[i], sinv);
      g(i) = inner_blocks(fs_[i], u);
    }

    RealChol chol;
    double ridge = 0.0;
    for (int attempt = 0;; ++attempt) {
      RMat reg = schur_;
      if (ridge > 0) reg.diagonal().array() += ridge;
      if (chol.factor(std::move(reg))) break;
      if (attempt >= 6) return false;
      const double base = schur_.diagonal().cwiseAbs().maxCoeff();
      ridge = (ridge == 0.0) ? 1e-14 * std::max(1.0, base) : ridge * 100;
    }

    RMat w;  // L^-1 C for the free-variable border
    Eigen::LLT<RMat> gchol;
    if (pfree_ > 0) {
      w = cdense_;
      chol.solve_lower(w);
      RMat gram = w.transpose() * w;
      gram.diagonal().array() += 1e-13 * std::max(1.0, gram.diagonal().maxCoeff());
      gchol.compute(gram);
      if (gchol.info() != Eigen::Success) return false;
    }

    const double mu = total_gap() / ntot_;

    // Predictor: aim at mu = 0, no second-order term.
    RVec dy_a(m_), dx_a(pfree_);
    std::vector<MatT> dz_a(nb_), ds_a(nb_);
    solve_direction(chol, gchol, w, sinv, h, g, 0.0, nullptr, nullptr,
                    dy_a, dx_a, dz_a, ds_a);
    const double ap_a = max_step(zlt, dz_a);
    const double ad_a = max_step(slt, ds_a);
    double gap_aff = 0.0;
    for (int b = 0; b < nb_; ++b)
      gap_aff += Tr::re(((z_[b] + ap_a * dz_a[b]).cwiseProduct((s_[b] + ad_a * ds_a[b]).transpose())).sum());
    gap_aff = std::max(gap_aff, 0.0);
    const double sigma = std::clamp(std::pow(gap_aff / std::max(total_gap(), 1e-300), 3.0), 1e-8, 1.0);

    // Corrector with Mehrotra second-order term.
    RVec dy(m_), dx(pfree_);
    std::vector<MatT> dz(nb_), ds(nb_);
    solve_direction(chol, gchol, w, sinv, h, g, sigma * mu, &dz_a, &ds_a,
                    dy, dx, dz, ds);

    double ap = opts_.step_frac * max_step(zlt, dz);
    double ad = opts_.step_frac * max_step(slt, ds);
    ap = std::min(ap, 1.0);
    ad = std::min(ad, 1.0);
    // Until both sides are feasible, move them together; decoupled steps let
    // one side race to its boundary and stall the other. Near the optimum the
    // decoupled steps give the usual fast tail.
    if (pres_ > opts_.tol || dres_ > opts_.tol) ap = ad = std::min(ap, ad);
    for (int b = 0; b < nb_; ++b) {
      z_[b] += ap * dz[b];
      s_[b] += ad * ds[b];
      z_[b] = Sc(0.5) * (z_[b] + z_[b].adjoint().eval());
      s_[b] = Sc(0.5) * (s_[b] + s_[b].adjoint().eval());
    }
    y_ += ad * dy;
    x_ += ap * dx;  // x is primal: it must move with Z to keep A(Z)+Cx-c contracting
    last_step_ = std::max(ap, ad);
    return true;
  }

  double total_gap() const {
    double gap = 0.0;
    for (int b = 0; b < nb_; ++b)
      gap += Tr::re((z_[b].cwiseProduct(s_[b].transpose())).sum());
    return std::max(gap, 0.0);
  }

  // HKM direction for complementarity target mu_t, optionally with the
  // Mehrotra corrector pair (dza, dsa).
  void solve_direction(const RealChol& chol, const Eigen::LLT<RMat>& gchol,
                       const RMat& w, const std::vector<MatT>& sinv,
                       const RVec& h, const RVec& g, double mu_t,
                       const std::vector<MatT>* dza, const std::vector<MatT>* dsa,
                       RVec& dy, RVec& dx, std::vector<MatT>& dz,
                       std::vector<MatT>& ds) {
    RVec q = RVec::Zero(m_);
    std::vector<MatT> corr(nb_);
    if (dza != nullptr) {
      for (int b = 0; b < nb_; ++b) corr[b] = sinv[b] * (*dsa)[b] * (*dza)[b];
      for (int i = 0; i < m_; ++i) q(i) = inner_blocks(fs_[i], corr);
    }
    RVec rhs1 = mu_t * h - g - q - p_.c;
    if (pfree_ > 0) rhs1 += cdense_ * x_;

    // Bordered KKT solve [M -C; C^T 0][dy; dx] = [r1; r2], with one pass of
    // iterative refinement (the Schur complement gets ill-conditioned near
    // the optimum and a raw solve loses primal feasibility digits).
    const RVec rf = pfree_ > 0 ? RVec(-p_.free_f - cdense_.transpose() * y_) : RVec();
    auto kkt = [&](const RVec& r1, const RVec& r2, RVec& oy, RVec& ox) {
      if (pfree_ > 0) {
        RMat u = r1;
        chol.solve_lower(u);
        ox = gchol.solve(r2 - (w.transpose() * u).eval());
        RMat t = u + w * ox;
        chol.solve_lower_t(t);
        oy = t;
      } else {
        RMat t = r1;
        chol.solve(t);
        oy = t;
        ox.resize(0);
      }
    };
    kkt(rhs1, rf, dy, dx);
    for (int pass = 0; pass < 2; ++pass) {
      RVec res1 = rhs1 - schur_ * dy;
      if (pfree_ > 0) res1 += cdense_ * dx;
      RVec res2 = pfree_ > 0 ? RVec(rf - cdense_.transpose() * dy) : RVec();
      RVec cy, cx;
      kkt(res1, res2, cy, cx);
      dy += cy;
      if (pfree_ > 0) dx += cx;
    }

    dz.assign(nb_, MatT());
    ds.assign(nb_, MatT());
    for (int b = 0; b < nb_; ++b) ds[b] = rd_[b];
    for (int i = 0; i < m_; ++i) accumulate(fs_[i], dy(i), ds);
    for (int b = 0; b < nb_; ++b) {
      dz[b] = mu_t * sinv[b] - z_[b] - sinv[b] * ds[b] * z_[b];
      if (dza != nullptr) dz[b] -= corr[b];
      dz[b] = Sc(0.5) * (dz[b] + dz[b].adjoint().eval());
    }
  }

  // Largest alpha with X + alpha dX staying PSD, given the factorization of X.
  double max_step(const std::vector<Eigen::LLT<MatT>>& xlt,
                  const std::vector<MatT>& dx) const {
    double alpha = std::numeric_limits<double>::infinity();
    for (int b = 0; b < nb_; ++b) {
      MatT t = dx[b];
      xlt[b].matrixL().solveInPlace(t);
      // t <- L^-1 dX L^-dag
      MatT td = t.adjoint();
      xlt[b].matrixL().solveInPlace(td);
      t = td.adjoint();
      Eigen::SelfAdjointEigenSolver<MatT> es(Sc(0.5) * (t + t.adjoint().eval()),
                                             Eigen::EigenvaluesOnly);
      const double lmin = es.eigenvalues().minCoeff();
      if (lmin < 0) alpha = std::min(alpha, -1.0 / lmin);
    }
    return std::min(alpha, 1e8);
  }

  RMat assemble_schur(const std::vector<MatT>& sinv) {
    RMat mtx = RMat::Zero(m_, m_);
    if (sparse_schur_) {
      // M_ij = Re sum over entry pairs of u * Sinv(q,r) * v * Z(s,p)
      for (int b = 0; b < nb_; ++b) {
        const auto& cons = blk_cons_[b];
        const MatT& si = sinv[b];
        const MatT& zb = z_[b];
        const int nc = static_cast<int>(cons.size());
#pragma omp parallel for schedule(dynamic, 16)
        for (int ci = 0; ci < nc; ++ci) {
          const auto [i, ki] = cons[ci];
          const auto& fi = fs_[i].full[ki];
          for (int cj = 0; cj <= ci; ++cj) {
            const auto [j, kj] = cons[cj];
            const auto& fj = fs_[j].full[kj];
            double acc = 0.0;
            for (const auto& ei : fi)
              for (const auto& ej : fj)
                acc += Tr::re(Tr::from(ei.v) * Tr::from(ej.v) * si(ei.j, ej.i) *
                              zb(ej.j, ei.i));
            // Within a block each constraint has one chunk, so distinct
            // (ci,cj) pairs touch distinct cells: no write races.
            if (i >= j) mtx(i, j) += acc;
            else mtx(j, i) += acc;
          }
        }
      }
    } else {
      for (int b = 0; b < nb_; ++b) {
        const auto& cons = blk_cons_[b];
        const MatT& si = sinv[b];
        const MatT& zb = z_[b];
        for (const auto& [j, kj] : cons) {
          // T = S^-1 F_j Z built from the nonzero columns of S^-1 F_j
          MatT sf = MatT::Zero(dims_[b], dims_[b]);
          for (const auto& e : fs_[j].full[kj])
            sf.col(e.j) += Tr::from(e.v) * si.col(e.i);
          const MatT t = sf * zb;
          for (const auto& [i, ki] : cons) {
            if (i < j) continue;
            double acc = 0.0;
            for (const auto& e : fs_[i].full[ki])
              acc += Tr::re(Tr::from(e.v) * t(e.j, e.i));
            mtx(i, j) += acc;
          }
        }
      }
    }
    mtx = mtx.selfadjointView<Eigen::Lower>();
    return mtx;
  }

  const SdpStandard& p_;
  SolveOptions opts_;
  double data_scale_ = 1.0;
  int nb_ = 0, m_ = 0, pfree_ = 0, ntot_ = 0, iter_ = 0;
  std::vector<int> dims_;
  ConsData f0_;
  std::vector<ConsData> fs_;
  std::vector<std::vector<std::pair<int, int>>> blk_cons_;  // block -> (constraint, chunk)
  bool sparse_schur_ = false;
  RMat cdense_;
  RMat schur_;
  std::vector<MatT> z_, s_, rd_;
  RVec y_, x_, az_, rp_;
  double pobj_ = 0, dobj_ = 0, pres_ = 0, dres_ = 0, gap_ = 0, last_step_ = 1.0;
};

void validate(const SdpStandard& p) {
  const int m = static_cast<int>(p.f.size());
  linalg::require(p.c.size() == m, "sdp: c length must match constraint count");
  for (const auto& b : p.blocks)
    linalg::require(b.dim >= 1, "sdp: block dimensions must be positive");
  auto check = [&](const ConstraintMat& cm, const char* what) {
    for (const auto& ch : cm.chunks) {
      linalg::require(ch.block >= 0 && ch.block < static_cast<int>(p.blocks.size()),
                      std::string("sdp: block index out of range in ") + what);
      const int d = p.blocks[ch.block].dim;
      for (const auto& e : ch.entries) {
        linalg::require(e.i >= 0 && e.i < d && e.j >= 0 && e.j < d,
                        std::string("sdp: entry index out of range in ") + what);
        linalg::require(e.i != e.j || std::abs(e.v.imag()) < 1e-12 * (1 + std::abs(e.v)),
                        std::string("sdp: diagonal entries must be real in ") + what);
        if (p.blocks[ch.block].field == BlockField::Real)
          linalg::require(std::abs(e.v.imag()) < 1e-12 * (1 + std::abs(e.v)),
                          std::string("sdp: real block with complex entry in ") + what);
      }
    }
  };
  check(p.f0, "F0");
  for (const auto& cm : p.f) check(cm, "F_m");
  if (p.free_c.cols() > 0) {
    linalg::require(p.free_c.rows() == m, "sdp: free-variable matrix row count");
    linalg::require(p.free_f.size() == p.free_c.cols(), "sdp: free objective length");
  }
}

}  // namespace

SdpSolution solve_standard(const SdpStandard& p, const SolveOptions& opts) {
  validate(p);
  linalg::require(p.free_c.cols() == 0 || !p.f.empty(),
                  "sdp: free variables require at least one constraint");
  if (p.f.empty() && p.free_c.cols() == 0) {
    // Unconstrained fallback: optimum is 0 at Z = 0 iff F0 >= 0.
    SdpSolution out;
    bool psd = true;
    for (int b = 0; b < static_cast<int>(p.blocks.size()); ++b) {
      const Mat f0b = p.f0.dense(b, p.blocks[b].dim);
      if (f0b.rows() > 0) {
        const auto ev = linalg::eigh(f0b).eigenvalues;
        if (ev.size() && ev(ev.size() - 1) < -1e-12) psd = false;
      }
      out.z.push_back(Mat::Zero(p.blocks[b].dim, p.blocks[b].dim));
    }
    out.status = psd ? SolveStatus::Optimal : SolveStatus::Unbounded;
    out.objective = out.primal_objective = out.dual_objective = 0.0;
    return out;
  }
  bool all_real = true;
  for (const auto& b : p.blocks) all_real = all_real && b.field == BlockField::Real;
  SdpSolution sol =
      all_real ? Engine<double>(p, opts).run() : Engine<cxd>(p, opts).run();
  return sol;
}

SdpSolution solve_inequality(const SdpInequality& p, const SolveOptions& opts) {
  // The inequality form is the Lagrangian dual of the standard form on the
  // same data; solve the pair and report the dual vector as x.
  SdpStandard q;
  q.blocks = p.blocks;
  q.f0 = p.g0;
  q.f = p.g;
  q.c = p.cprime;
  SdpSolution sol = solve_standard(q, opts);
  if (sol.status == SolveStatus::Infeasible) sol.status = SolveStatus::Unbounded;
  else if (sol.status == SolveStatus::Unbounded) sol.status = SolveStatus::Infeasible;
  sol.objective = sol.dual_objective;  // x.c' at the dual iterate
  sol.duality_gap = std::abs(sol.primal_objective - sol.dual_objective) /
                    (1.0 + std::abs(sol.objective));
  return sol;
}

void dump_problem(const SdpStandard& p, const std::string& path) {
  std::ofstream os(path);
  os << "{\n  \"blocks\": [";
  for (size_t b = 0; b < p.blocks.size(); ++b)
    os << (b ? ", " : "") << "{\"dim\": " << p.blocks[b].dim << ", \"field\": \""
       << (p.blocks[b].field == BlockField::Real ? "real" : "complex") << "\"}";
  os << "],\n";
  auto put_mat = [&](const ConstraintMat& cm) {
    os << "[";
    for (size_t b = 0; b < p.blocks.size(); ++b) {
      const Mat m = cm.dense(static_cast<int>(b), p.blocks[b].dim);
      os << (b ? ", " : "") << "[";
      for (int i = 0; i < m.rows(); ++i) {
        os << (i ? ", " : "") << "[";
        for (int j = 0; j < m.cols(); ++j)
          os << (j ? ", " : "") << "[" << m(i, j).real() << ", " << m(i, j).imag() << "]";
        os << "]";
      }
      os << "]";
    }
    os << "]";
  };
  os << "  \"F0\": ";
  put_mat(p.f0);
  os << ",\n  \"F\": [";
  for (size_t i = 0; i < p.f.size(); ++i) {
    os << (i ? ", " : "");
    put_mat(p.f[i]);
  }
  os << "],\n  \"c\": [";
  for (int i = 0; i < p.c.size(); ++i) os << (i ? ", " : "") << p.c(i);
  os << "]\n}\n";
}

}  // namespace bellbound::sdp
