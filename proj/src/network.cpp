#include "rislink/network.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rislink/error.hpp"

namespace rislink {

namespace {

void check_rcond(const Eigen::PartialPivLU<CMatrix>& lu) {
  const double rc = lu.rcond();
  if (!(rc >= kMinReciprocalCondition)) {
    std::ostringstream os;
    os << "resonant/ill-conditioned loading: reciprocal condition number of (I - S_ii*Gamma) is "
       << rc << " (threshold " << kMinReciprocalCondition << ")";
    throw IllConditionedError(os.str(), rc);
  }
}

}  // namespace

ScatterMatrix::ScatterMatrix(CMatrix entries, double freq_hz, double z0_ohm,
                             std::vector<PortRole> roles)
    : entries_(std::move(entries)), freq_hz_(freq_hz), z0_ohm_(z0_ohm), roles_(std::move(roles)) {
  if (entries_.rows() != entries_.cols())
    throw DimensionError("scatter matrix must be square");
  if (static_cast<std::size_t>(entries_.rows()) != roles_.size())
    throw DimensionError("scatter matrix dimension " + std::to_string(entries_.rows()) +
                         " does not match " + std::to_string(roles_.size()) + " port roles");
  if (!(freq_hz_ > 0.0)) throw DimensionError("frequency must be positive");
  if (!(z0_ohm_ > 0.0)) throw DimensionError("reference impedance must be positive");

  const auto n_tx = std::count_if(roles_.begin(), roles_.end(),
                                  [](const PortRole& r) { return r.kind == PortKind::Tx; });
  const auto n_rx = std::count_if(roles_.begin(), roles_.end(),
                                  [](const PortRole& r) { return r.kind == PortKind::Rx; });
  if (n_tx != n_rx || n_tx > 1)
    throw DimensionError("a full link needs exactly one Tx and one Rx port; a RIS-only matrix needs none");
  has_tx_ = n_tx == 1;
  if (has_tx_ && (roles_.front().kind != PortKind::Tx || roles_.back().kind != PortKind::Rx))
    throw DimensionError("Tx must be the first port and Rx the last");
}

ScatterMatrix ScatterMatrix::ris_only(CMatrix entries, double freq_hz, double z0_ohm,
                                      const std::vector<int>& element_numbers) {
  std::vector<PortRole> roles;
  roles.reserve(element_numbers.size());
  for (int m : element_numbers) roles.push_back(PortRole::ris(m));
  return ScatterMatrix(std::move(entries), freq_hz, z0_ohm, std::move(roles));
}

std::size_t ScatterMatrix::element_count() const noexcept {
  return roles_.size() - (has_tx_ ? 2 : 0);
}

std::vector<int> ScatterMatrix::element_numbers() const {
  std::vector<int> out;
  for (const auto& r : roles_)
    if (r.kind == PortKind::RisElement) out.push_back(r.element);
  return out;
}

Eigen::Index ScatterMatrix::tx_index() const {
  if (!has_tx_) throw DimensionError("matrix has no Tx port");
  return 0;
}

Eigen::Index ScatterMatrix::rx_index() const {
  if (!has_tx_) throw DimensionError("matrix has no Rx port");
  return size() - 1;
}

ReflectionVector::ReflectionVector(std::vector<Complex> g) : gammas(std::move(g)) {
  for (std::size_t m = 0; m < gammas.size(); ++m) {
    if (!(std::abs(gammas[m]) <= 1.0 + 1e-12))
      throw DimensionError("load reflection coefficient " + std::to_string(m) +
                           " has magnitude above 1");
  }
}

ScatterMatrix reduce_loaded(const ScatterMatrix& full, const ReflectionVector& loads) {
  if (!full.is_full_link()) throw DimensionError("reduce_loaded needs a full Tx/RIS/Rx link");
  const auto n = static_cast<Eigen::Index>(full.element_count());
  if (static_cast<Eigen::Index>(loads.size()) != n)
    throw DimensionError("load vector length " + std::to_string(loads.size()) + " != " +
                         std::to_string(n) + " RIS ports");

  const CMatrix& s = full.entries();
  const Eigen::Index rx = n + 1;
  CMatrix s_ee(2, 2);
  s_ee << s(0, 0), s(0, rx), s(rx, 0), s(rx, rx);

  CMatrix reduced = s_ee;
  if (n > 0) {
    CMatrix s_ei(2, n), s_ie(n, 2);
    s_ei.row(0) = s.block(0, 1, 1, n);
    s_ei.row(1) = s.block(rx, 1, 1, n);
    s_ie.col(0) = s.block(1, 0, n, 1);
    s_ie.col(1) = s.block(1, rx, n, 1);
    const CMatrix s_ii = s.block(1, 1, n, n);

    const CVector g = Eigen::Map<const CVector>(loads.gammas.data(), n);
    const CMatrix m = CMatrix::Identity(n, n) - s_ii * g.asDiagonal();
    Eigen::PartialPivLU<CMatrix> lu(m);
    check_rcond(lu);
    reduced += s_ei * g.asDiagonal() * lu.solve(s_ie);
  }
  return ScatterMatrix(std::move(reduced), full.freq_hz(), full.z0_ohm(),
                       {PortRole::tx(), PortRole::rx()});
}

double power_transfer(const ScatterMatrix& reduced) {
  if (reduced.size() != 2 || !reduced.is_full_link())
    throw DimensionError("power_transfer needs a reduced 2x2 {Tx, Rx} matrix");
  return std::norm(reduced(1, 0));
}

double largest_singular_value(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues()(0);
}

bool check_passivity(const CMatrix& s, double tol) {
  return largest_singular_value(s) <= 1.0 + tol;
}

bool check_passivity(const ScatterMatrix& s, double tol) { return check_passivity(s.entries(), tol); }

bool check_reciprocity(const CMatrix& s, double tol) {
  if (s.rows() != s.cols()) throw DimensionError("reciprocity check needs a square matrix");
  double worst = 0.0;
  for (Eigen::Index i = 0; i < s.rows(); ++i)
    for (Eigen::Index j = i + 1; j < s.cols(); ++j)
      worst = std::max(worst, std::abs(s(i, j) - s(j, i)));
  return worst <= tol;
}

bool check_reciprocity(const ScatterMatrix& s, double tol) { return check_reciprocity(s.entries(), tol); }

LinkReducer::LinkReducer(const ScatterMatrix& full) {
  if (!full.is_full_link()) throw DimensionError("LinkReducer needs a full Tx/RIS/Rx link");
  const auto n = static_cast<Eigen::Index>(full.element_count());
  const CMatrix& s = full.entries();
  inner_ = s.block(1, 1, n, n);
  tx_col_ = s.block(1, 0, n, 1);
  rx_row_ = s.block(n + 1, 1, 1, n).transpose();
  direct_ = s(n + 1, 0);
}

Complex LinkReducer::transfer(const ReflectionVector& loads) const { return transfer(loads.gammas); }

Complex LinkReducer::transfer(const std::vector<Complex>& gammas) const {
  const auto n = inner_.rows();
  if (static_cast<Eigen::Index>(gammas.size()) != n)
    throw DimensionError("load vector length does not match RIS port count");
  if (n == 0) return direct_;
  const CVector g = Eigen::Map<const CVector>(gammas.data(), n);
  const CMatrix m = CMatrix::Identity(n, n) - inner_ * g.asDiagonal();
  Eigen::PartialPivLU<CMatrix> lu(m);
  check_rcond(lu);
  const CVector v = lu.solve(tx_col_);
  return direct_ + (rx_row_.array() * g.array() * v.array()).sum();
}

Complex LinkReducer::transfer_with_gradient(const std::vector<Complex>& gammas,
                                            std::vector<Complex>& d_transfer) const {
  // S21 = d + r^T G M^-1 t with M = I - S G.
  // dS21/dg_m = u_m v_m where v = M^-1 t and u = r + S^T M^-T G r.
  const auto n = inner_.rows();
  if (static_cast<Eigen::Index>(gammas.size()) != n)
    throw DimensionError("load vector length does not match RIS port count");
  d_transfer.assign(static_cast<std::size_t>(n), Complex{});
  if (n == 0) return direct_;
  const CVector g = Eigen::Map<const CVector>(gammas.data(), n);
  const CMatrix m = CMatrix::Identity(n, n) - inner_ * g.asDiagonal();
  Eigen::PartialPivLU<CMatrix> lu(m);
  check_rcond(lu);
  const CVector v = lu.solve(tx_col_);
  const CVector gr = g.cwiseProduct(rx_row_);
  const CVector y = lu.transpose().solve(gr);
  const CVector u = rx_row_ + inner_.transpose() * y;
  for (Eigen::Index k = 0; k < n; ++k) d_transfer[static_cast<std::size_t>(k)] = u(k) * v(k);
  return direct_ + (gr.array() * v.array()).sum();
}

}  // namespace rislink
