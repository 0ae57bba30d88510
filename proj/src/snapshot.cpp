#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "magmix/error.hpp"
#include "magmix/llg.hpp"

namespace magmix {

namespace {

// %.17g round-trips every finite double.
std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& tok, std::size_t line) {
  double v = 0.0;
  const auto* first = tok.data();
  const auto* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) {
    throw ConfigError("snapshot: bad number '" + tok + "' on line " + std::to_string(line));
  }
  return v;
}

}  // namespace

void write_snapshot(std::ostream& os, const SpinField& s) {
  const Grid& g = s.grid();
  os << "MMS1 " << g.nx << ' ' << g.ny << ' ' << fmt_double(g.dx) << ' ' << fmt_double(g.dy) << ' '
     << fmt_double(g.thickness) << '\n';
  for (const auto& v : s.values()) {
    os << fmt_double(v.x) << ' ' << fmt_double(v.y) << ' ' << fmt_double(v.z) << '\n';
  }
}

SpinField read_snapshot(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("snapshot: empty input");
  std::istringstream hs(line);
  std::string magic, dx, dy, th;
  Grid g;
  if (!(hs >> magic >> g.nx >> g.ny >> dx >> dy >> th) || magic != "MMS1") {
    throw ConfigError("snapshot: bad header '" + line + "'");
  }
  g.dx = parse_double(dx, 1);
  g.dy = parse_double(dy, 1);
  g.thickness = parse_double(th, 1);
  SpinField s(g);
  auto m = s.mutable_values();
  for (std::size_t c = 0; c < m.size(); ++c) {
    if (!std::getline(is, line)) {
      throw ConfigError("snapshot: expected " + std::to_string(m.size()) + " cells, got " +
                        std::to_string(c));
    }
    std::istringstream ls(line);
    std::string a, b, z;
    if (!(ls >> a >> b >> z)) throw ConfigError("snapshot: malformed line " + std::to_string(c + 2));
    m[c] = {parse_double(a, c + 2), parse_double(b, c + 2), parse_double(z, c + 2)};
    if (std::abs(norm(m[c]) - 1.0) > 1e-9) {
      throw ConfigError("snapshot: non-unit magnetization on line " + std::to_string(c + 2));
    }
  }
  return s;
}

void save_snapshot(const std::filesystem::path& path, const SpinField& s) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  write_snapshot(os, s);
  if (!os) throw IoError("write failed: " + path.string());
}

SpinField load_snapshot(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  return read_snapshot(is);
}

}  // namespace magmix
