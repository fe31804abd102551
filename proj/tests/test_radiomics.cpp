#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "radiocon/data.hpp"
#include "radiocon/radiomics.hpp"
#include "radiocon/tensor.hpp"

using namespace radiocon;
using namespace radiocon::radiomics;

namespace {

// Sparse matrix keyed by 1-based (gray level, length/size/dependence).
using Table = std::map<std::pair<int, int>, double>;

double xlog2x(double p) { return p > 0 ? p * std::log2(p) : 0.0; }

bool close(double actual, double expected, double tol = 1e-9) {
  return std::abs(actual - expected) <= tol * std::max(1.0, std::abs(expected));
}

template <std::size_t N>
void check_all(const std::array<double, N>& actual, const std::vector<double>& expected,
               std::size_t name_offset) {
  REQUIRE(expected.size() == N);
  const auto names = feature_names();
  for (std::size_t i = 0; i < N; ++i) {
    INFO(names[name_offset + i], " actual=", actual[i], " expected=", expected[i]);
    CHECK(close(actual[i], expected[i]));
  }
}

struct Case {
  GrayImage image;
  BoundingBox box;
  RoiMask mask;
  DiscretizedRoi disc;
};

Case random_case(std::mt19937_64& rng, int bins) {
  std::uniform_int_distribution<int> side(3, 16);
  Case c;
  c.image = GrayImage(side(rng), side(rng));
  // Few distinct intensities so zones and runs longer than one pixel occur.
  std::uniform_int_distribution<int> palette(0, 5);
  const int stride = std::uniform_int_distribution<int>(1, 50)(rng);
  for (auto& p : c.image.pixels) p = static_cast<std::uint8_t>(palette(rng) * stride);
  std::uniform_int_distribution<int> bx(0, c.image.width - 2), by(0, c.image.height - 2);
  c.box.x = bx(rng);
  c.box.y = by(rng);
  c.box.w = std::uniform_int_distribution<int>(2, c.image.width - c.box.x)(rng);
  c.box.h = std::uniform_int_distribution<int>(2, c.image.height - c.box.y)(rng);
  c.mask = data::roi_mask_from_bbox(c.image, c.box);
  c.disc = discretize(c.image, c.mask, bins);
  return c;
}

std::vector<std::pair<int, int>> roi_pixels(const DiscretizedRoi& d) {
  std::vector<std::pair<int, int>> out;
  for (int y = 0; y < d.height; ++y) {
    for (int x = 0; x < d.width; ++x) {
      if (d.at(x, y) > 0) out.emplace_back(x, y);
    }
  }
  return out;
}

// ---- first order ----

double oracle_percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const double lo = std::floor(h);
  const auto i = static_cast<std::size_t>(lo);
  if (i + 1 >= v.size()) return v.back();
  return v[i] + (h - lo) * (v[i + 1] - v[i]);
}

std::vector<double> oracle_first_order(const Case& c) {
  std::vector<double> x;
  std::vector<int> lv;
  for (auto [px, py] : roi_pixels(c.disc)) {
    x.push_back(c.image.at(px, py));
    lv.push_back(c.disc.at(px, py));
  }
  const double n = static_cast<double>(x.size());
  double energy = 0;
  for (double v : x) energy += v * v;
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double var = 0, m3 = 0, m4 = 0, mad = 0;
  for (double v : x) {
    var += std::pow(v - mean, 2) / n;
    m3 += std::pow(v - mean, 3) / n;
    m4 += std::pow(v - mean, 4) / n;
    mad += std::abs(v - mean) / n;
  }
  double entropy = 0, uniformity = 0;
  for (int g = 1; g <= c.disc.gray_levels; ++g) {
    const double p = static_cast<double>(std::count(lv.begin(), lv.end(), g)) / n;
    entropy -= xlog2x(p);
    uniformity += p * p;
  }
  const double p10 = oracle_percentile(x, 0.1), p90 = oracle_percentile(x, 0.9);
  std::vector<double> mid;
  for (double v : x) {
    if (v >= p10 && v <= p90) mid.push_back(v);
  }
  const double mid_mean = std::accumulate(mid.begin(), mid.end(), 0.0) / mid.size();
  double rmad = 0;
  for (double v : mid) rmad += std::abs(v - mid_mean) / mid.size();
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  return {energy,
          entropy,
          *lo,
          p10,
          p90,
          *hi,
          mean,
          oracle_percentile(x, 0.5),
          oracle_percentile(x, 0.75) - oracle_percentile(x, 0.25),
          *hi - *lo,
          mad,
          rmad,
          std::sqrt(energy / n),
          var > 0 ? m3 / std::pow(var, 1.5) : 0.0,
          var > 0 ? m4 / (var * var) : 0.0,
          var,
          uniformity,
          energy};
}

// ---- GLCM ----

Eigen::MatrixXd oracle_glcm(const DiscretizedRoi& d) {
  const int g = d.gray_levels;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(g, g);
  int used = 0;
  for (const auto& dir : kDirections) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(g, g);
    // Every ordered pair of ROI pixels separated by +dir or -dir.
    const auto pix = roi_pixels(d);
    for (auto [ax, ay] : pix) {
      for (auto [bx, by] : pix) {
        const int dx = bx - ax, dy = by - ay;
        if ((dx == dir.dx && dy == dir.dy) || (dx == -dir.dx && dy == -dir.dy)) {
          m(d.at(ax, ay) - 1, d.at(bx, by) - 1) += 1;
        }
      }
    }
    if (m.sum() == 0) continue;
    acc += m / m.sum();
    ++used;
  }
  if (used == 0) return Eigen::MatrixXd::Ones(1, 1);
  return acc / used;
}

std::vector<double> oracle_glcm_features(const Eigen::MatrixXd& p) {
  const int ng = static_cast<int>(p.rows());
  auto P = [&](int i, int j) { return p(i - 1, j - 1); };
  std::vector<double> px(ng + 1, 0), py(ng + 1, 0);
  for (int i = 1; i <= ng; ++i) {
    for (int j = 1; j <= ng; ++j) {
      px[i] += P(i, j);
      py[j] += P(i, j);
    }
  }
  double ux = 0, uy = 0;
  for (int i = 1; i <= ng; ++i) {
    ux += i * px[i];
    uy += i * py[i];
  }
  double sx2 = 0, sy2 = 0;
  for (int i = 1; i <= ng; ++i) {
    sx2 += (i - ux) * (i - ux) * px[i];
    sy2 += (i - uy) * (i - uy) * py[i];
  }
  auto pxpy_sum = [&](int k) {
    double s = 0;
    for (int i = 1; i <= ng; ++i) {
      for (int j = 1; j <= ng; ++j) {
        if (i + j == k) s += P(i, j);
      }
    }
    return s;
  };
  auto pxmy = [&](int k) {
    double s = 0;
    for (int i = 1; i <= ng; ++i) {
      for (int j = 1; j <= ng; ++j) {
        if (std::abs(i - j) == k) s += P(i, j);
      }
    }
    return s;
  };
  double autocorr = 0, prom = 0, shade = 0, tend = 0, contrast = 0, energy = 0, hxy = 0;
  double hxy1 = 0, hxy2 = 0, idm = 0, idmn = 0, id = 0, idn = 0, invvar = 0;
  for (int i = 1; i <= ng; ++i) {
    for (int j = 1; j <= ng; ++j) {
      const double v = P(i, j);
      autocorr += i * j * v;
      prom += std::pow(i + j - ux - uy, 4) * v;
      shade += std::pow(i + j - ux - uy, 3) * v;
      tend += std::pow(i + j - ux - uy, 2) * v;
      contrast += (i - j) * (i - j) * v;
      energy += v * v;
      hxy -= xlog2x(v);
      if (v > 0) hxy1 -= v * std::log2(px[i] * py[j]);
      hxy2 -= xlog2x(px[i] * py[j]);
      idm += v / (1.0 + (i - j) * (i - j));
      idmn += v / (1.0 + static_cast<double>((i - j) * (i - j)) / (ng * ng));
      id += v / (1.0 + std::abs(i - j));
      idn += v / (1.0 + static_cast<double>(std::abs(i - j)) / ng);
      if (i != j) invvar += v / ((i - j) * (i - j));
    }
  }
  double hx = 0, hy = 0;
  for (int i = 1; i <= ng; ++i) {
    hx -= xlog2x(px[i]);
    hy -= xlog2x(py[i]);
  }
  double davg = 0, dent = 0;
  for (int k = 0; k < ng; ++k) {
    davg += k * pxmy(k);
    dent -= xlog2x(pxmy(k));
  }
  double dvar = 0;
  for (int k = 0; k < ng; ++k) dvar += (k - davg) * (k - davg) * pxmy(k);
  double savg = 0, sent = 0;
  for (int k = 2; k <= 2 * ng; ++k) {
    savg += k * pxpy_sum(k);
    sent -= xlog2x(pxpy_sum(k));
  }
  const double sigma = std::sqrt(sx2 * sy2);
  const double corr = sigma < 1e-12 ? 1.0 : (autocorr - ux * uy) / sigma;
  const double hmax = std::max(hx, hy);

  // MCC from the non-symmetric Q matrix with a general eigensolver.
  double mcc = 1.0;
  std::vector<int> present;
  for (int i = 1; i <= ng; ++i) {
    if (px[i] > 0) present.push_back(i);
  }
  if (present.size() > 1 && sigma >= 1e-12) {
    const auto m = static_cast<Eigen::Index>(present.size());
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index a = 0; a < m; ++a) {
      for (Eigen::Index b = 0; b < m; ++b) {
        for (int k : present) {
          q(a, b) += P(present[a], k) * P(present[b], k) / (px[present[a]] * py[k]);
        }
      }
    }
    Eigen::EigenSolver<Eigen::MatrixXd> solver(q, false);
    std::vector<double> ev;
    for (Eigen::Index k = 0; k < m; ++k) ev.push_back(solver.eigenvalues()(k).real());
    std::sort(ev.rbegin(), ev.rend());
    mcc = std::sqrt(std::max(0.0, ev[1]));
  }
  return {autocorr, ux, prom, shade, tend, contrast, corr, davg, dent, dvar, energy, hxy,
          hmax > 0 ? (hxy - hxy1) / hmax : 0.0,
          std::sqrt(1.0 - std::exp(-2.0 * std::max(0.0, hxy2 - hxy))),
          idm, idmn, id, idn, invvar, p.maxCoeff(), savg, sent, sx2, mcc};
}

// ---- run length, size zone, dependence ----

Table oracle_runs(const DiscretizedRoi& d) {
  Table t;
  for (const auto& dir : kDirections) {
    for (auto [x, y] : roi_pixels(d)) {
      const int level = d.at(x, y);
      // A run starts where the previous pixel along the direction differs.
      if (d.at(x - dir.dx, y - dir.dy) == level) continue;
      int len = 0;
      while (d.at(x + len * dir.dx, y + len * dir.dy) == level) ++len;
      t[{level, len}] += 1.0 / kDirections.size();
    }
  }
  return t;
}

Table oracle_zones(const DiscretizedRoi& d) {
  // Union-find over 8-connected equal-level neighbours.
  const auto n = d.levels.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (auto [x, y] : roi_pixels(d)) {
    for (auto [bx, by] : roi_pixels(d)) {
      if (std::max(std::abs(bx - x), std::abs(by - y)) != 1) continue;
      if (d.at(x, y) != d.at(bx, by)) continue;
      parent[find(static_cast<std::size_t>(y) * d.width + x)] =
          find(static_cast<std::size_t>(by) * d.width + bx);
    }
  }
  std::map<std::size_t, std::pair<int, int>> zone;  // root -> (level, size)
  for (auto [x, y] : roi_pixels(d)) {
    auto& z = zone[find(static_cast<std::size_t>(y) * d.width + x)];
    z.first = d.at(x, y);
    ++z.second;
  }
  Table t;
  for (const auto& [root, z] : zone) t[z] += 1.0;
  return t;
}

Table oracle_dependence(const DiscretizedRoi& d) {
  Table t;
  for (auto [x, y] : roi_pixels(d)) {
    int dep = 0;
    for (auto [bx, by] : roi_pixels(d)) {
      if (std::max(std::abs(bx - x), std::abs(by - y)) <= 1 && d.at(bx, by) == d.at(x, y)) ++dep;
    }
    t[{d.at(x, y), dep}] += 1.0;
  }
  return t;
}

std::vector<double> oracle_emphasis(const Table& t, double np) {
  double nz = 0;
  for (const auto& [k, v] : t) nz += v;
  auto mean_of = [&](auto f) {
    double s = 0;
    for (const auto& [k, v] : t) s += v * f(static_cast<double>(k.first), static_cast<double>(k.second));
    return s / nz;
  };
  std::map<int, double> by_level, by_size;
  for (const auto& [k, v] : t) {
    by_level[k.first] += v;
    by_size[k.second] += v;
  }
  double gln = 0, sn = 0;
  for (const auto& [k, v] : by_level) gln += v * v;
  for (const auto& [k, v] : by_size) sn += v * v;
  const double mi = mean_of([](double i, double) { return i; });
  const double mj = mean_of([](double, double j) { return j; });
  double ent = 0;
  for (const auto& [k, v] : t) ent -= xlog2x(v / nz);
  return {mean_of([](double, double j) { return 1 / (j * j); }),
          mean_of([](double, double j) { return j * j; }),
          gln / nz,
          gln / (nz * nz),
          sn / nz,
          sn / (nz * nz),
          nz / np,
          mean_of([&](double i, double) { return (i - mi) * (i - mi); }),
          mean_of([&](double, double j) { return (j - mj) * (j - mj); }),
          ent,
          mean_of([](double i, double) { return 1 / (i * i); }),
          mean_of([](double i, double) { return i * i; }),
          mean_of([](double i, double j) { return 1 / (i * i * j * j); }),
          mean_of([](double i, double j) { return i * i / (j * j); }),
          mean_of([](double i, double j) { return j * j / (i * i); }),
          mean_of([](double i, double j) { return i * i * j * j; })};
}

std::vector<double> gldm_subset(const std::vector<double>& e) {
  return {e[0], e[1], e[2], e[4], e[5], e[7], e[8], e[9], e[10], e[11], e[12], e[13], e[14], e[15]};
}

// ---- NGTDM ----

std::vector<double> oracle_ngtdm(const DiscretizedRoi& d) {
  const int g = d.gray_levels;
  std::vector<double> s(g + 1, 0), n(g + 1, 0);
  for (auto [x, y] : roi_pixels(d)) {
    std::vector<int> nb;
    for (auto [bx, by] : roi_pixels(d)) {
      if (std::max(std::abs(bx - x), std::abs(by - y)) == 1) nb.push_back(d.at(bx, by));
    }
    if (nb.empty()) continue;
    const double avg = std::accumulate(nb.begin(), nb.end(), 0.0) / nb.size();
    s[d.at(x, y)] += std::abs(d.at(x, y) - avg);
    n[d.at(x, y)] += 1;
  }
  const double nvp = std::accumulate(n.begin(), n.end(), 0.0);
  if (nvp == 0) return {1.0 / kCoarsenessEpsilon, 0, 0, 0, 0};
  std::vector<double> p(g + 1);
  for (int i = 1; i <= g; ++i) p[i] = n[i] / nvp;
  double ps = 0, stot = 0;
  int ngp = 0;
  for (int i = 1; i <= g; ++i) {
    ps += p[i] * s[i];
    stot += s[i];
    ngp += p[i] > 0;
  }
  double con = 0, bden = 0, comp = 0, str = 0;
  for (int i = 1; i <= g; ++i) {
    for (int j = 1; j <= g; ++j) {
      if (p[i] == 0 || p[j] == 0) continue;
      con += p[i] * p[j] * (i - j) * (i - j);
      bden += std::abs(i * p[i] - j * p[j]);
      comp += std::abs(i - j) * (p[i] * s[i] + p[j] * s[j]) / (p[i] + p[j]);
      str += (p[i] + p[j]) * (i - j) * (i - j);
    }
  }
  return {ps < kCoarsenessEpsilon ? 1.0 / kCoarsenessEpsilon : 1.0 / ps,
          ngp > 1 ? con / (ngp * (ngp - 1.0)) * stot / nvp : 0.0,
          bden > 0 ? ps / bden : 0.0,
          comp / nvp,
          stot > 0 ? str / stot : 0.0};
}

DiscretizedRoi levels_roi(int w, int h, std::vector<int> levels, int g) {
  DiscretizedRoi d;
  d.width = w;
  d.height = h;
  d.gray_levels = g;
  d.levels = std::move(levels);
  return d;
}

RoiMask full_mask(int w, int h) { return RoiMask{w, h, std::vector<std::uint8_t>(w * h, 1)}; }

}  // namespace

TEST_CASE("feature schema has 102 unique names") {
  const auto names = feature_names();
  CHECK(names.size() == 102);
  CHECK(std::set<std::string>(names.begin(), names.end()).size() == 102);
  CHECK(names.front() == "shape2D_PixelSurface");
  CHECK(names.back() == "gldm_LargeDependenceHighGrayLevelEmphasis");
}

TEST_CASE("discretize hand cases") {
  GrayImage img(2, 1);
  img.pixels = {0, 255};
  auto d = discretize(img, full_mask(2, 1), 2);
  CHECK(d.levels == std::vector<int>{1, 2});

  GrayImage flat(3, 3, 77);
  d = discretize(flat, full_mask(3, 3), 32);
  CHECK(d.gray_levels == 1);
  CHECK(std::all_of(d.levels.begin(), d.levels.end(), [](int l) { return l == 1; }));

  GrayImage ramp(256, 1);
  for (int i = 0; i < 256; ++i) ramp.pixels[i] = static_cast<std::uint8_t>(i);
  d = discretize(ramp, full_mask(256, 1), 32);
  for (int g = 1; g <= 32; ++g) CHECK(std::count(d.levels.begin(), d.levels.end(), g) == 8);

  CHECK_THROWS_AS(discretize(flat, RoiMask{3, 3, std::vector<std::uint8_t>(9, 0)}, 32), ContractError);
  CHECK_THROWS_AS(discretize(flat, full_mask(3, 3), 1), ParameterError);
}

TEST_CASE("affine rescaling leaves the level map unchanged") {
  std::mt19937_64 rng(3);
  GrayImage a(12, 12), b(12, 12);
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    a.pixels[i] = static_cast<std::uint8_t>(rng() % 80);
    b.pixels[i] = static_cast<std::uint8_t>(3 * a.pixels[i] + 10);
  }
  CHECK(discretize(a, full_mask(12, 12), 32).levels == discretize(b, full_mask(12, 12), 32).levels);
}

TEST_CASE("first-order hand cases") {
  GrayImage img(4, 1);
  img.pixels = {1, 2, 3, 4};
  const auto f = first_order_features(img, full_mask(4, 1));
  CHECK(f[6] == 2.5);   // Mean
  CHECK(f[15] == 1.25);  // Variance
  CHECK(f[9] == 3);     // Range

  GrayImage flat(5, 2, 9);
  const auto g = first_order_features(flat, full_mask(5, 2));
  CHECK(g[6] == 9);
  CHECK(g[15] == 0);
  CHECK(g[1] == 0);
  CHECK(g[16] == 1);
  CHECK(g[0] == 10 * 81);
}

TEST_CASE("GLCM hand cases") {
  // 2x2 checkerboard, horizontal pairs only.
  const auto d = levels_roi(2, 2, {1, 2, 2, 1}, 2);
  const Eigen::MatrixXd counts = cooccurrence_counts(d, kDirections[0]);
  CHECK(counts(0, 1) == 2);
  CHECK(counts(1, 0) == 2);
  const auto f = glcm_features_from_matrix(counts / counts.sum());
  CHECK(f[5] == 1);     // Contrast
  CHECK(f[19] == 0.5);  // MaximumProbability
  CHECK(f[10] == 0.5);  // JointEnergy

  const auto c = glcm_features(levels_roi(3, 3, std::vector<int>(9, 1), 1));
  CHECK(c[5] == 0);
  CHECK(c[19] == 1);
  CHECK(c[10] == 1);
  CHECK(c[6] == 1);
}

TEST_CASE("run, zone and neighbourhood hand cases") {
  const auto row = levels_roi(3, 1, {1, 1, 2}, 2);
  const Eigen::MatrixXd runs = run_length_counts(row, kDirections[0]);
  CHECK(runs(0, 1) == 1);
  CHECK(runs(1, 0) == 1);
  CHECK(runs.sum() == 2);
  CHECK(glrlm_features_from_matrix(runs, 3)[0] == 0.625);

  const auto flat = levels_roi(4, 3, std::vector<int>(12, 1), 1);
  CHECK(run_length_counts(flat, kDirections[0])(0, 3) == 3);
  const Eigen::MatrixXd zones = size_zone_counts(flat);
  CHECK(zones.sum() == 1);
  CHECK(zones(0, 11) == 1);

  const auto centre = levels_roi(3, 3, {1, 1, 1, 1, 2, 1, 1, 1, 1}, 2);
  const auto table = ngtdm_table(centre);
  CHECK(table.s[1] == 1.0);
  CHECK(table.n[1] == 1.0);
}

TEST_CASE("shape hand cases") {
  const auto rect = shape2d_features(full_mask(5, 3));
  CHECK(rect[0] == 15);
  CHECK(rect[1] == 16);
  CHECK(rect[8] == 15);

  RoiMask one{3, 3, std::vector<std::uint8_t>(9, 0)};
  one.bits[4] = 1;
  const auto s = shape2d_features(one);
  CHECK(s[0] == 1);
  CHECK(s[1] == 4);
  CHECK(s[7] == 1);
  CHECK(s[4] == 0);
}

TEST_CASE("maximum diameter matches all-pairs brute force") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    RoiMask m{16, 16, std::vector<std::uint8_t>(256, 0)};
    // Random blob: a few overlapping discs.
    for (int k = 0; k < 3; ++k) {
      const int cx = rng() % 16, cy = rng() % 16, r = 1 + rng() % 5;
      for (int y = 0; y < 16; ++y) {
        for (int x = 0; x < 16; ++x) {
          if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) m.bits[y * 16 + x] = 1;
        }
      }
    }
    double best = 0;
    for (int a = 0; a < 256; ++a) {
      for (int b = 0; b < 256; ++b) {
        if (!m.bits[a] || !m.bits[b]) continue;
        best = std::max(best, std::hypot(a % 16 - b % 16, a / 16 - b / 16));
      }
    }
    CHECK(maximum_diameter(m) == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("texture and first-order features match brute-force oracles") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const int bins = trial % 2 == 0 ? 32 : 8;
    const Case c = random_case(rng, bins);
    CAPTURE(trial);
    const double np = static_cast<double>(c.disc.roi_size());

    check_all(first_order_features(c.image, c.mask, bins), oracle_first_order(c), kShapeCount);

    const Eigen::MatrixXd glcm = oracle_glcm(c.disc);
    CHECK((averaged_glcm(c.disc) - glcm).cwiseAbs().maxCoeff() < 1e-15);
    check_all(glcm_features(c.disc), oracle_glcm_features(glcm), kShapeCount + kFirstOrderCount);

    const auto rz = run_zone_features(c.disc);
    const std::size_t base = kShapeCount + kFirstOrderCount + kGlcmCount;
    check_all(rz.glrlm, oracle_emphasis(oracle_runs(c.disc), np), base);
    check_all(rz.glszm, oracle_emphasis(oracle_zones(c.disc), np), base + kGlrlmCount);
    check_all(ngtdm_features(c.disc), oracle_ngtdm(c.disc), base + kGlrlmCount + kGlszmCount);
    const auto dep = oracle_dependence(c.disc);
    check_all(rz.gldm, gldm_subset(oracle_emphasis(dep, np)),
              base + kGlrlmCount + kGlszmCount + kNgtdmCount);
  }
}

TEST_CASE("constant ROI gives the degenerate-value vector") {
  const double c = 100;
  const GrayImage flat(8, 8, static_cast<std::uint8_t>(c));
  const auto v = extract_radiomics(flat, std::nullopt).values;
  CHECK(v.size() == 102);

  const std::size_t fo = kShapeCount, gl = fo + kFirstOrderCount, rl = gl + kGlcmCount;
  const std::size_t sz = rl + kGlrlmCount, ng = sz + kGlszmCount;
  // First order: no spread at all.
  const std::vector<double> first{64 * c * c, 0, c, c, c, c, c, c, 0, 0, 0, 0, c, 0, 0, 0, 1, 64 * c * c};
  for (std::size_t i = 0; i < first.size(); ++i) CHECK(v[fo + i] == first[i]);
  // GLCM: single 1x1 entry, sigma = 0.
  const std::vector<double> glcm{1, 1, 0, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1, 1, 1, 1, 0, 1, 2, 0, 0, 1};
  for (std::size_t i = 0; i < glcm.size(); ++i) CHECK(v[gl + i] == glcm[i]);
  // GLSZM: one zone of 64 pixels.
  const std::vector<double> zone{1.0 / 4096, 4096, 1, 1, 1, 1, 1.0 / 64, 0,
                                 0,          0,    1, 1, 1.0 / 4096, 1.0 / 4096, 4096, 4096};
  for (std::size_t i = 0; i < zone.size(); ++i) CHECK(v[sz + i] == zone[i]);
  // NGTDM: every difference is zero, so coarseness hits its cap.
  const std::vector<double> ngtdm{1.0 / kCoarsenessEpsilon, 0, 0, 0, 0};
  for (std::size_t i = 0; i < ngtdm.size(); ++i) CHECK(v[ng + i] == ngtdm[i]);
  // GLRLM: whole-line runs, so run percentage is runs per pixel averaged over
  // the directions (8 + 8 + 15 + 15) / 4 / 64.
  CHECK(v[rl + 6] == doctest::Approx(11.5 / 64).epsilon(1e-15));
  CHECK(v[rl + 7] == 0);

  // A single-pixel ROI has no pairs and no neighbours.
  const auto one = extract_radiomics(flat, BoundingBox{3, 3, 1, 1}).values;
  for (std::size_t i = 0; i < glcm.size(); ++i) CHECK(one[gl + i] == glcm[i]);
  for (std::size_t i = 0; i < ngtdm.size(); ++i) CHECK(one[ng + i] == ngtdm[i]);
  CHECK(one[0] == 1);
  CHECK(one[7] == 1);
  for (double x : one) CHECK(std::isfinite(x));
}

TEST_CASE("extract_radiomics conventions") {
  std::mt19937_64 rng(5);
  GrayImage img(20, 16);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng() % 256);

  const auto absent = extract_radiomics(img, std::nullopt);
  const auto whole = extract_radiomics(img, BoundingBox{0, 0, 20, 16});
  CHECK(absent.values == whole.values);
  CHECK(absent.schema_id == kSchemaId);
  for (double x : absent.values) CHECK(std::isfinite(x));

  // Moving ROI content and box together changes nothing.
  GrayImage shifted(20, 16, 0);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) shifted.at(x + 9, y + 5) = img.at(x + 2, y + 3);
  }
  const auto a = extract_radiomics(img, BoundingBox{2, 3, 8, 8});
  const auto b = extract_radiomics(shifted, BoundingBox{9, 5, 8, 8});
  CHECK(a.values == b.values);

  CHECK_THROWS_AS(extract_radiomics(img, BoundingBox{30, 30, 4, 4}), ContractError);
  CHECK(extract_radiomics(img, BoundingBox{2, 3, 8, 8}).values == a.values);
}
