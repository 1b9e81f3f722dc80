#include "kinspec/cache.hpp"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace kinspec {

namespace {

constexpr char kMagic[8] = {'K', 'S', 'P', 'C', 'O', 'L', 'L', '\0'};
constexpr std::uint32_t kVersion = 1;

void put_doubles(std::ofstream& os, const double* p, std::size_t count) {
  os.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(count * sizeof(double)));
}
bool get_doubles(std::ifstream& is, double* p, std::size_t count) {
  is.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(count * sizeof(double)));
  return static_cast<bool>(is);
}
void put_matrix(std::ofstream& os, const Mat& m) {
  // Row-major on disk.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> r = m;
  put_doubles(os, r.data(), static_cast<std::size_t>(r.size()));
}
bool get_matrix(std::ifstream& is, Mat& m, int rows, int cols) {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> r(rows, cols);
  if (!get_doubles(is, r.data(), static_cast<std::size_t>(r.size()))) return false;
  m = r;
  return true;
}

}  // namespace

std::string collision_cache_key(int n, Scheme scheme, const CollisionOptions& opts) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "collision_n%d_%s_%s_w%.6g_nt%.3g_st%.3g.bin", n, scheme_name(scheme),
                diagonal_rule_name(opts.rule), opts.bump_width, opts.nullspace_tol, opts.solve_tol);
  return buf;
}

void save_collision(const std::string& path, const CollisionMatrices& c, const MacroMoments& m) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw KinError("cache", "cannot write " + tmp);
    os.write(kMagic, sizeof kMagic);
    os.write(reinterpret_cast<const char*>(&kVersion), sizeof kVersion);
    const std::string key = collision_cache_key(c.quad.n, c.quad.scheme, c.opts);
    const std::uint32_t len = static_cast<std::uint32_t>(key.size());
    os.write(reinterpret_cast<const char*>(&len), sizeof len);
    os.write(key.data(), len);
    const double scalars[] = {c.gap_mu, c.l_norm, c.nu0, c.nu1, m.m11, m.m22, m.m33, m.m44, m.m14, m.m41};
    put_doubles(os, scalars, std::size(scalars));
    put_doubles(os, c.raw_residual.data(), 5);
    put_doubles(os, c.nu_diag.data(), static_cast<std::size_t>(c.nu_diag.size()));
    put_matrix(os, c.k_mat);
    put_matrix(os, c.l_mat);
    put_matrix(os, Mat(c.chi.transpose()));
  }
  std::filesystem::rename(tmp, path);
}

std::optional<std::pair<CollisionMatrices, MacroMoments>> load_collision(const std::string& path, int n, Scheme scheme,
                                                                         const CollisionOptions& opts) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return std::nullopt;
  char magic[8];
  std::uint32_t version = 0, len = 0;
  is.read(magic, sizeof magic);
  is.read(reinterpret_cast<char*>(&version), sizeof version);
  is.read(reinterpret_cast<char*>(&len), sizeof len);
  if (!is || std::string(magic, 8) != std::string(kMagic, 8) || version != kVersion || len > 4096) return std::nullopt;
  std::string key(len, '\0');
  is.read(key.data(), len);
  if (key != collision_cache_key(n, scheme, opts)) return std::nullopt;

  CollisionMatrices c;
  MacroMoments m;
  c.quad = build_quadrature(n, scheme);
  c.opts = opts;
  const int nv = c.quad.size();
  double scalars[10];
  if (!get_doubles(is, scalars, 10) || !get_doubles(is, c.raw_residual.data(), 5)) return std::nullopt;
  c.nu_diag.resize(nv);
  if (!get_doubles(is, c.nu_diag.data(), nv)) return std::nullopt;
  Mat chit;
  if (!get_matrix(is, c.k_mat, nv, nv) || !get_matrix(is, c.l_mat, nv, nv) || !get_matrix(is, chit, 5, nv))
    return std::nullopt;
  c.chi = chit.transpose();
  c.l_norm = scalars[1];
  c.nu0 = scalars[2];
  c.nu1 = scalars[3];
  m.m11 = scalars[4];
  m.m22 = scalars[5];
  m.m33 = scalars[6];
  m.m44 = scalars[7];
  m.m14 = scalars[8];
  m.m41 = scalars[9];
  m.kappa0 = -m.m22;
  m.kappa1 = -m.m44;
  finalize_collision(c);
  return std::make_pair(std::move(c), m);
}

std::pair<CollisionMatrices, MacroMoments> cached_collision(const std::string& cache_dir, int n, Scheme scheme,
                                                            const CollisionOptions& opts) {
  std::string path;
  if (!cache_dir.empty()) {
    std::filesystem::create_directories(cache_dir);
    path = (std::filesystem::path(cache_dir) / collision_cache_key(n, scheme, opts)).string();
    if (auto hit = load_collision(path, n, scheme, opts)) return std::move(*hit);
  }
  CollisionMatrices c = assemble_collision(build_quadrature(n, scheme), opts);
  MacroMoments m = transport_coefficients(c);
  if (!path.empty()) save_collision(path, c, m);
  return {std::move(c), m};
}

}  // namespace kinspec
