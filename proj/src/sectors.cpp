#include "kinspec/sectors.hpp"

#include <cmath>
#include <map>

namespace kinspec {

int SectorBasis::parity_of(int axis) const {
  for (size_t k = 0; k < axes.size(); ++k)
    if (axes[k] == axis) return parity[k];
  return 0;
}

Mat SectorBasis::restrict_matrix(const Mat& m) const {
  const int d = dim();
  Mat mq = Mat::Zero(m.rows(), d);
  for (int c = 0; c < d; ++c)
    for (auto [i, w] : cols[c]) mq.col(c) += w * m.col(i);
  Mat out(d, d);
  for (int r = 0; r < d; ++r) {
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(d);
    for (auto [i, w] : cols[r]) acc += w * mq.row(i);
    out.row(r) = acc;
  }
  return out;
}

Mat SectorBasis::restrict_diag(const Vec& dvals) const {
  // Each orbit contributes one column per sector, so distinct columns have disjoint support.
  Mat out = Mat::Zero(dim(), dim());
  for (int c = 0; c < dim(); ++c)
    for (auto [i, w] : cols[c]) out(c, c) += w * w * dvals(i);
  return out;
}

std::vector<SectorBasis> reflection_sectors(const VelocityQuadrature& q, const std::vector<int>& axes) {
  const int k = static_cast<int>(axes.size());
  const int ng = 1 << k;
  std::vector<SectorBasis> out(ng);
  for (int p = 0; p < ng; ++p) {
    SectorBasis& sb = out[p];
    sb.axes = axes;
    sb.n_full = q.size();
    sb.parity.resize(k);
    for (int a = 0; a < k; ++a) sb.parity[a] = (p >> (k - 1 - a)) & 1;
  }
  for (int idx = 0; idx < q.size(); ++idx) {
    auto ai = q.axis_index(idx);
    bool rep = true;
    for (int a : axes) rep = rep && ai[a] <= q.n - 1 - ai[a];
    if (!rep) continue;
    for (int p = 0; p < ng; ++p) {
      SectorBasis& sb = out[p];
      std::map<int, double> acc;
      for (int g = 0; g < ng; ++g) {
        int j = idx;
        double chr = 1;
        for (int a = 0; a < k; ++a)
          if ((g >> a) & 1) {
            j = q.mirror(j, axes[a]);
            if (sb.parity[a]) chr = -chr;
          }
        acc[j] += chr;
      }
      std::vector<std::pair<int, double>> col;
      double nrm = 0;
      for (auto [j, w] : acc)
        if (std::abs(w) > 0.5) {
          col.emplace_back(j, w);
          nrm += w * w;
        }
      if (col.empty()) continue;
      nrm = std::sqrt(nrm);
      for (auto& e : col) e.second /= nrm;
      sb.cols.push_back(std::move(col));
    }
  }
  return out;
}

}  // namespace kinspec
