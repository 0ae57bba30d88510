#include "magmix/texture.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "magmix/error.hpp"

namespace magmix {

namespace {

constexpr int kFitHalfWindow = 10;
constexpr int kMinStripeCells = 4;

struct DisjointSet {
  std::vector<std::size_t> parent;
  explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

// An interface edge between two adjacent cells of opposite m_x sign.
struct Edge {
  bool normal_x;  // true: cells (i-1, j) | (i, j); false: cells (i, j-1) | (i, j)
  int i;
  int j;
};

}  // namespace

TextureKind parse_texture_kind(std::string_view name) {
  if (name == "uniform") return TextureKind::Uniform;
  if (name == "one-step") return TextureKind::OneStep;
  if (name == "two-step") return TextureKind::TwoStep;
  if (name == "multi-step") return TextureKind::MultiStep;
  throw ConfigError("unknown texture kind '" + std::string(name) + "'");
}

std::string_view to_string(TextureKind kind) {
  switch (kind) {
    case TextureKind::Uniform: return "uniform";
    case TextureKind::OneStep: return "one-step";
    case TextureKind::TwoStep: return "two-step";
    case TextureKind::MultiStep: return "multi-step";
  }
  return "?";
}

WallStabilization parse_wall_stabilization(std::string_view name) {
  if (name == "anisotropy-stripes") return WallStabilization::AnisotropyStripes;
  if (name == "init-only") return WallStabilization::InitOnly;
  throw ConfigError("unknown wall stabilization '" + std::string(name) + "'");
}

std::string_view to_string(WallStabilization s) {
  return s == WallStabilization::AnisotropyStripes ? "anisotropy-stripes" : "init-only";
}

void TextureSpec::validate() const {
  switch (kind) {
    case TextureKind::Uniform:
      if (n_walls != 0) throw ConfigError("texture: uniform requires n_walls = 0");
      break;
    case TextureKind::OneStep:
      if (n_walls != 1) throw ConfigError("texture: one-step requires n_walls = 1");
      break;
    case TextureKind::TwoStep:
      if (n_walls != 2) throw ConfigError("texture: two-step requires n_walls = 2");
      break;
    case TextureKind::MultiStep:
      if (n_walls < 1) throw ConfigError("texture: multi-step requires n_walls >= 1");
      break;
  }
  if (!(stripe_anisotropy_factor > 0.0)) {
    throw ConfigError("texture: stripe_anisotropy_factor must be > 0");
  }
  if (!(stripe_gap > 0.0)) throw ConfigError("texture: stripe_gap must be > 0");
}

std::string TextureSpec::label() const {
  std::string out(to_string(kind));
  if (kind == TextureKind::MultiStep) out += "(" + std::to_string(n_walls) + ")";
  return out;
}

std::pair<SpinField, MaterialMap> build_texture(const TextureSpec& spec, const Grid& grid,
                                                const Material& base, DemagMode demag) {
  spec.validate();
  grid.validate();
  SpinField s(grid, {1.0, 0.0, 0.0});
  MaterialMap mat = MaterialMap::uniform(grid, base, demag);
  const int walls = spec.n_walls;
  if (walls == 0) return {std::move(s), std::move(mat)};

  const int stripes = walls + 1;
  if (grid.nx / stripes < kMinStripeCells) {
    throw ConfigError("texture: " + std::to_string(stripes) + " stripes do not fit " +
                      std::to_string(grid.nx) + " cells (need >= " +
                      std::to_string(kMinStripeCells) + " cells per stripe)");
  }
  // Wall k sits on the cell edge closest to k * nx / stripes.
  std::vector<int> edges(static_cast<std::size_t>(walls));
  for (int k = 1; k <= walls; ++k) {
    edges[static_cast<std::size_t>(k - 1)] =
        static_cast<int>(std::lround(static_cast<double>(k) * grid.nx / stripes));
  }

  const double width_cells = base.K_u > 0.0 ? std::sqrt(base.A_ex / base.K_u) / grid.dx : 4.0;
  // Stiffer domain interiors leave each wall in a soft gap: a potential well against the
  // bias pressure, and a larger barrier against unwinding of neighbouring wall pairs.
  Material hard = base;
  hard.K_u = base.K_u * spec.stripe_anisotropy_factor;
  const double half_gap = 0.5 * spec.stripe_gap * width_cells;

  for (int i = 0; i < grid.nx; ++i) {
    const double x = i + 0.5;
    // Nearest wall decides the local profile.
    std::size_t k = 0;
    for (std::size_t w = 1; w < edges.size(); ++w) {
      if (std::abs(x - edges[w]) < std::abs(x - edges[k])) k = w;
    }
    const double left_sign = (k % 2 == 0) ? 1.0 : -1.0;
    const double u = (x - edges[k]) / std::max(width_cells, 0.5);
    const Vec3 m{-left_sign * std::tanh(u), 1.0 / std::cosh(u), 0.0};
    const bool interior =
        spec.stabilization == WallStabilization::AnisotropyStripes && std::abs(x - edges[k]) >= half_gap;
    for (int j = 0; j < grid.ny; ++j) {
      const auto c = grid.index(i, j);
      s.set(c, m);
      if (interior) mat.set_cell(c, hard);
    }
  }
  return {std::move(s), std::move(mat)};
}

std::pair<double, double> fit_tanh_profile(std::span<const double> x, std::span<const double> m,
                                           double sign, double x0_guess, double width_guess) {
  double x0 = x0_guess;
  double w = width_guess;
  auto cost = [&](double a, double b) {
    double c = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double r = m[k] - sign * std::tanh((x[k] - a) / b);
      c += r * r;
    }
    return c;
  };
  double lambda = 1e-3;
  double current = cost(x0, w);
  for (int it = 0; it < 200; ++it) {
    double jtj00 = 0, jtj01 = 0, jtj11 = 0, g0 = 0, g1 = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double u = (x[k] - x0) / w;
      const double sech2 = 1.0 / (std::cosh(u) * std::cosh(u));
      const double r = m[k] - sign * std::tanh(u);
      const double d0 = -sign * sech2 / w;      // d model / d x0
      const double d1 = -sign * sech2 * u / w;  // d model / d w
      jtj00 += d0 * d0;
      jtj01 += d0 * d1;
      jtj11 += d1 * d1;
      g0 += d0 * r;
      g1 += d1 * r;
    }
    const double a00 = jtj00 * (1.0 + lambda);
    const double a11 = jtj11 * (1.0 + lambda);
    const double det = a00 * a11 - jtj01 * jtj01;
    if (det == 0.0) break;
    const double s0 = (g0 * a11 - g1 * jtj01) / det;
    const double s1 = (a00 * g1 - jtj01 * g0) / det;
    const double nx0 = x0 + s0;
    const double nw = w + s1;
    if (nw > 0.0 && cost(nx0, nw) < current) {
      x0 = nx0;
      w = nw;
      const double prev = current;
      current = cost(x0, w);
      lambda = std::max(lambda * 0.3, 1e-12);
      if (prev - current <= 1e-15 * std::max(prev, 1e-300) &&
          std::abs(s0) + std::abs(s1) < 1e-12 * (std::abs(x0) + w)) {
        break;
      }
    } else {
      lambda *= 10.0;
      if (lambda > 1e12) break;
    }
  }
  return {x0, w};
}

WallMetrics wall_metrics(const SpinField& s, double threshold) {
  const Grid& g = s.grid();
  auto mx = [&](int i, int j) { return s.at(i, j).x; };
  auto positive = [&](int i, int j) { return mx(i, j) >= 0.0; };

  std::vector<Edge> edges;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 1; i < g.nx; ++i) {
      if (positive(i - 1, j) != positive(i, j)) edges.push_back({true, i, j});
    }
  }
  for (int j = 1; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      if (positive(i, j - 1) != positive(i, j)) edges.push_back({false, i, j});
    }
  }
  WallMetrics out;
  if (edges.empty()) return out;

  // Edges sharing a lattice vertex belong to the same interface.
  const auto vid = [&](int vi, int vj) {
    return static_cast<std::size_t>(vj) * static_cast<std::size_t>(g.nx + 1) + static_cast<std::size_t>(vi);
  };
  const std::size_t nvert = static_cast<std::size_t>(g.nx + 1) * static_cast<std::size_t>(g.ny + 1);
  DisjointSet ds(nvert);
  for (const auto& e : edges) {
    if (e.normal_x) {
      ds.unite(vid(e.i, e.j), vid(e.i, e.j + 1));
    } else {
      ds.unite(vid(e.i, e.j), vid(e.i + 1, e.j));
    }
  }

  struct Component {
    double length = 0.0;
    bool genuine = false;
    double width_sum = 0.0;
    int width_count = 0;
  };
  std::vector<std::size_t> roots;
  std::vector<Component> comps;
  auto component_of = [&](std::size_t root) -> Component& {
    auto it = std::find(roots.begin(), roots.end(), root);
    if (it != roots.end()) return comps[static_cast<std::size_t>(it - roots.begin())];
    roots.push_back(root);
    comps.emplace_back();
    return comps.back();
  };

  std::vector<double> xs, ms;
  for (const auto& e : edges) {
    Component& comp = component_of(ds.find(vid(e.i, e.j)));
    const int n_along = e.normal_x ? g.nx : g.ny;
    const int pos = e.normal_x ? e.i : e.j;
    const double h = e.normal_x ? g.dx : g.dy;
    comp.length += e.normal_x ? g.dy : g.dx;
    auto sample = [&](int p) { return e.normal_x ? mx(p, e.j) : mx(e.i, p); };

    const int lo = std::max(0, pos - kFitHalfWindow);
    const int hi = std::min(n_along - 1, pos + kFitHalfWindow - 1);
    double before = 0.0;
    double after = 0.0;
    for (int p = lo; p < pos; ++p) before = std::abs(sample(p)) > std::abs(before) ? sample(p) : before;
    for (int p = pos; p <= hi; ++p) after = std::abs(sample(p)) > std::abs(after) ? sample(p) : after;
    if (std::min(std::abs(before), std::abs(after)) < threshold || before * after >= 0.0) continue;
    comp.genuine = true;

    xs.clear();
    ms.clear();
    for (int p = lo; p <= hi; ++p) {
      xs.push_back((p + 0.5) * h);
      ms.push_back(sample(p));
    }
    const double sign = after > before ? 1.0 : -1.0;
    const double m0 = sample(pos - 1);
    const double m1 = sample(pos);
    const double x0 = (pos - 0.5 + m0 / (m0 - m1)) * h;
    const double w0 = h / std::max(std::abs(m1 - m0), 1e-3);
    const auto [fx0, fw] = fit_tanh_profile(xs, ms, sign, x0, w0);
    (void)fx0;
    comp.width_sum += fw;
    ++comp.width_count;
  }

  double width_total = 0.0;
  int width_walls = 0;
  for (const auto& c : comps) {
    if (!c.genuine) continue;
    ++out.wall_count;
    out.total_length += c.length;
    if (c.width_count > 0) {
      width_total += c.width_sum / c.width_count;
      ++width_walls;
    }
  }
  out.mean_width = width_walls > 0 ? width_total / width_walls : 0.0;
  return out;
}

}  // namespace magmix
