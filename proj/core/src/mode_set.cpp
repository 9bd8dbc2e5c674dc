#include "cohset/mode_set.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "csv_util.hpp"

namespace cohset {

std::vector<IVec2> lattice_ball(double r) {
  if (!(r >= 0.0)) throw ValidationError("mode set: radius must be non-negative");
  const int bound = static_cast<int>(std::floor(r));
  const double r2 = r * r;
  std::vector<IVec2> points;
  for (int a = -bound; a <= bound; ++a) {
    for (int b = -bound; b <= bound; ++b) {
      // Integer norms are exact; ties on the boundary are included.
      if (static_cast<double>(a * a + b * b) <= r2) points.push_back({a, b});
    }
  }
  return points;
}

ModeSet ModeSet::product_ball(int K, double r) {
  if (K < 0) throw ValidationError("product_ball: K must be non-negative");
  const auto ball = lattice_ball(r);
  std::vector<ModeIndex> modes;
  modes.reserve(static_cast<std::size_t>(2 * K + 1) * (2 * K + 1) * ball.size());
  for (int m1 = -K; m1 <= K; ++m1) {
    for (int m2 = -K; m2 <= K; ++m2) {
      for (const auto& n : ball) modes.push_back({{m1, m2}, n});
    }
  }
  ModeSet set = from_modes(std::move(modes));
  set.kind_ = Kind::product_ball;
  set.K_ = K;
  set.r_ = r;
  return set;
}

ModeSet ModeSet::class_union(int K, double r) {
  if (K < 0) throw ValidationError("class_union: K must be non-negative");
  const auto ball = lattice_ball(r);
  std::vector<ModeIndex> modes;
  modes.reserve(static_cast<std::size_t>(2 * K + 1) * (2 * K + 1) * ball.size());
  for (int k = -K; k <= K; ++k) {
    for (int l = -K; l <= K; ++l) {
      for (const auto& n : ball) modes.push_back({{n[0] + k, n[1] + l}, n});
    }
  }
  ModeSet set = from_modes(std::move(modes));
  set.kind_ = Kind::class_union;
  set.K_ = K;
  set.r_ = r;
  return set;
}

ModeSet ModeSet::from_modes(std::vector<ModeIndex> modes) {
  std::sort(modes.begin(), modes.end());
  if (std::adjacent_find(modes.begin(), modes.end()) != modes.end()) {
    throw ValidationError("mode set: duplicate modes");
  }
  ModeSet set;
  set.modes_ = std::move(modes);
  set.build_lookup();
  return set;
}

void ModeSet::build_lookup() {
  max_m_ = 0;
  max_n_ = 0;
  for (const auto& md : modes_) {
    max_m_ = std::max({max_m_, std::abs(md.m[0]), std::abs(md.m[1])});
    max_n_ = std::max({max_n_, std::abs(md.n[0]), std::abs(md.n[1])});
  }
  const std::size_t wm = 2 * max_m_ + 1;
  const std::size_t wn = 2 * max_n_ + 1;
  lookup_.assign(wm * wm * wn * wn, -1);
  for (std::size_t i = 0; i < modes_.size(); ++i) {
    const auto& md = modes_[i];
    const std::size_t flat = ((static_cast<std::size_t>(md.m[0] + max_m_) * wm + (md.m[1] + max_m_)) * wn +
                              (md.n[0] + max_n_)) * wn + (md.n[1] + max_n_);
    lookup_[flat] = static_cast<std::int32_t>(i);
  }
}

std::int64_t ModeSet::find(const ModeIndex& md) const {
  if (std::abs(md.m[0]) > max_m_ || std::abs(md.m[1]) > max_m_ || std::abs(md.n[0]) > max_n_ ||
      std::abs(md.n[1]) > max_n_ || modes_.empty()) {
    return -1;
  }
  const std::size_t wm = 2 * max_m_ + 1;
  const std::size_t wn = 2 * max_n_ + 1;
  const std::size_t flat = ((static_cast<std::size_t>(md.m[0] + max_m_) * wm + (md.m[1] + max_m_)) * wn +
                            (md.n[0] + max_n_)) * wn + (md.n[1] + max_n_);
  return lookup_[flat];
}

std::optional<std::size_t> ModeSet::index_of(const ModeIndex& mode) const {
  const auto i = find(mode);
  if (i < 0) return std::nullopt;
  return static_cast<std::size_t>(i);
}

bool ModeSet::negation_closed() const {
  return std::all_of(modes_.begin(), modes_.end(), [this](const ModeIndex& md) { return contains(md.negated()); });
}

std::string ModeSet::kind_name() const {
  switch (kind_) {
    case Kind::product_ball: return "product_ball";
    case Kind::class_union: return "class_union";
    case Kind::custom: return "custom";
  }
  return "custom";
}

void write_modes_csv(const ModeSet& modes, std::ostream& out) {
  out << "m1,m2,n1,n2\n";
  for (const auto& md : modes.modes()) {
    out << md.m[0] << ',' << md.m[1] << ',' << md.n[0] << ',' << md.n[1] << '\n';
  }
}

ModeSet read_modes_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != "m1,m2,n1,n2") {
    throw ValidationError("modes CSV: expected header m1,m2,n1,n2");
  }
  std::vector<ModeIndex> modes;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv(line);
    if (cells.size() != 4) throw ValidationError("modes CSV line " + std::to_string(line_no) + ": expected 4 columns");
    modes.push_back({{detail::parse_int(cells[0]), detail::parse_int(cells[1])},
                     {detail::parse_int(cells[2]), detail::parse_int(cells[3])}});
  }
  // Preserve file order: the matrix rows/columns refer to it.
  ModeSet set = ModeSet::from_modes(modes);
  for (std::size_t i = 0; i < modes.size(); ++i) {
    if (set.mode(i) != modes[i]) throw ValidationError("modes CSV: modes are not in canonical order");
  }
  return set;
}

}  // namespace cohset
