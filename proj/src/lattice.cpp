#include "perclab/lattice.hpp"

#include <bit>
#include <cmath>
#include <string>

#include "perclab/error.hpp"
#include "perclab/rng.hpp"

namespace perc {

Edge Edge::between(VertexCoord a, VertexCoord b) {
  if (!adjacent(a, b)) throw Error(ErrorCode::usage, "edge endpoints are not adjacent");
  if (b < a) std::swap(a, b);
  return Edge{a, a.y == b.y ? Orientation::horizontal : Orientation::vertical};
}

// A horizontal edge at (x,y) is crossed by the vertical dual edge whose lower
// end is (x+1/2, y-1/2); a vertical edge by the horizontal dual edge whose
// left end is (x-1/2, y+1/2).
DualEdge dual_edge(const Edge& e) {
  if (e.orientation == Orientation::horizontal)
    return DualEdge{{e.lo.x, e.lo.y - 1}, Orientation::vertical};
  return DualEdge{{e.lo.x - 1, e.lo.y}, Orientation::horizontal};
}

Edge primal_edge(const DualEdge& d) {
  if (d.orientation == Orientation::vertical)
    return Edge{{d.lo.x, d.lo.y + 1}, Orientation::horizontal};
  return Edge{{d.lo.x + 1, d.lo.y}, Orientation::vertical};
}

BoxRegion::BoxRegion(int radius) : n_(radius), side_(2 * radius + 1) {
  if (radius < 0) throw Error(ErrorCode::usage, "box radius must be nonnegative");
}

std::size_t BoxRegion::edge_index(const Edge& e) const {
  return e.orientation == Orientation::horizontal ? horizontal_edge(e.lo.x + n_, e.lo.y + n_)
                                                  : vertical_edge(e.lo.x + n_, e.lo.y + n_);
}

Edge BoxRegion::edge_at(std::size_t idx) const {
  const int row = static_cast<int>(idx / edge_stride());
  const int c = static_cast<int>(idx % edge_stride());
  if (c < side_ - 1) return Edge{{c - n_, row - n_}, Orientation::horizontal};
  return Edge{{c - (side_ - 1) - n_, row - n_}, Orientation::vertical};
}

std::vector<Edge> enumerate_edges(const BoxRegion& box) {
  std::vector<Edge> out;
  out.reserve(box.edge_count());
  for (std::size_t i = 0; i < box.edge_count(); ++i) out.push_back(box.edge_at(i));
  return out;
}

Annulus::Annulus(int m, int n) : inner(m), outer(n) {
  if (m < 0 || m >= n) throw Error(ErrorCode::usage, "annulus needs 0 <= m < n");
}

bool annulus_membership(const Annulus& a, VertexCoord v) {
  const int r = max_norm(v);
  return r >= a.inner && r <= a.outer;
}

Configuration::Configuration(const BoxRegion& region, bool all_open)
    : region_(region), bits_((region.edge_count() + 63) / 64, 0) {
  if (all_open) {
    for (auto& w : bits_) w = ~std::uint64_t{0};
    if (const std::size_t tail = region.edge_count() & 63; tail != 0 && !bits_.empty())
      bits_.back() = (std::uint64_t{1} << tail) - 1;
  }
}

std::size_t Configuration::count_open() const {
  std::size_t c = 0;
  for (auto w : bits_) c += static_cast<std::size_t>(std::popcount(w));
  return c;
}

namespace {

inline std::uint64_t read_bits(const std::uint64_t* src, std::size_t off, unsigned k) {
  const std::size_t w = off >> 6;
  const unsigned b = off & 63;
  std::uint64_t v = src[w] >> b;
  if (b != 0 && b + k > 64) v |= src[w + 1] << (64 - b);
  return k == 64 ? v : v & ((std::uint64_t{1} << k) - 1);
}

inline void write_bits(std::uint64_t* dst, std::size_t off, std::uint64_t v, unsigned k) {
  const std::size_t w = off >> 6;
  const unsigned b = off & 63;
  const std::uint64_t mask = k == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << k) - 1;
  dst[w] = (dst[w] & ~(mask << b)) | (v << b);
  if (b != 0 && b + k > 64) {
    const unsigned spill = b + k - 64;
    const std::uint64_t m2 = (std::uint64_t{1} << spill) - 1;
    dst[w + 1] = (dst[w + 1] & ~m2) | (v >> (64 - b));
  }
}

void copy_bits(std::uint64_t* dst, std::size_t dst_off, const std::uint64_t* src,
               std::size_t src_off, std::size_t count) {
  while (count > 0) {
    const unsigned k = count >= 64 ? 64u : static_cast<unsigned>(count);
    write_bits(dst, dst_off, read_bits(src, src_off, k), k);
    dst_off += k;
    src_off += k;
    count -= k;
  }
}

constexpr int kCoordOffset = 1 << 15;

// Writes the states of `count` consecutive edges of one orientation in one
// lattice row, starting at global x = x0, into bits [dst_off, dst_off+count).
void fill_segment(std::uint64_t* dst, std::size_t dst_off, int x0, int y, Orientation o,
                  std::size_t count, double p, const PhiloxKey& key, std::uint32_t attempt,
                  std::uint64_t replica, std::vector<std::uint64_t>& scratch) {
  if (count == 0) return;
  const std::uint32_t row_code =
      2u * static_cast<std::uint32_t>(y + kCoordOffset) + static_cast<std::uint32_t>(o);
  const std::uint32_t r_lo = static_cast<std::uint32_t>(replica);
  const std::uint32_t r_hi = static_cast<std::uint32_t>(replica >> 32);
  const std::uint32_t gx0 = static_cast<std::uint32_t>(x0 + kCoordOffset);
  if (p == 0.5) {
    // one bit per edge, 128 edges per Philox block
    const std::uint32_t b0 = gx0 >> 7;
    const std::uint32_t b1 = (gx0 + static_cast<std::uint32_t>(count) - 1) >> 7;
    scratch.resize(2 * static_cast<std::size_t>(b1 - b0 + 1) + 1);
    for (std::uint32_t b = b0; b <= b1; ++b) {
      const auto c = philox4x32({(row_code << 9) | b, attempt, r_lo, r_hi}, key);
      scratch[2 * (b - b0)] = c[0] | (static_cast<std::uint64_t>(c[1]) << 32);
      scratch[2 * (b - b0) + 1] = c[2] | (static_cast<std::uint64_t>(c[3]) << 32);
    }
    copy_bits(dst, dst_off, scratch.data(), gx0 - (b0 << 7), count);
    return;
  }
  const double threshold = p * 4294967296.0;
  PhiloxCounter block{};
  std::uint32_t cur = ~0u;
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint32_t gx = gx0 + static_cast<std::uint32_t>(i);
    if ((gx >> 2) != cur) {
      cur = gx >> 2;
      block = philox4x32({(1u << 31) | (row_code << 14) | cur, attempt, r_lo, r_hi}, key);
    }
    const bool open = static_cast<double>(block[gx & 3]) < threshold;
    const std::size_t bit = dst_off + i;
    if (open) dst[bit >> 6] |= std::uint64_t{1} << (bit & 63);
    else dst[bit >> 6] &= ~(std::uint64_t{1} << (bit & 63));
  }
}

}  // namespace

Configuration Configuration::restricted(int r) const {
  if (r < 0 || r > region_.radius()) throw Error(ErrorCode::usage, "restriction radius out of range");
  BoxRegion small(r);
  Configuration out(small);
  out.provenance_ = provenance_;
  const int n = region_.radius();
  const int L = small.side();
  for (int row = 0; row < L; ++row) {
    const int big_row = row + (n - r);
    copy_bits(out.bits_.data(), small.horizontal_edge(0, row), bits_.data(),
              region_.horizontal_edge(n - r, big_row), static_cast<std::size_t>(L - 1));
    if (row + 1 < L)
      copy_bits(out.bits_.data(), small.vertical_edge(0, row), bits_.data(),
                region_.vertical_edge(n - r, big_row), static_cast<std::size_t>(L));
  }
  return out;
}

void resample(Configuration& config, double p, std::uint64_t seed, std::uint64_t replica,
              std::uint64_t attempt) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::usage, "p must lie in [0, 1]");
  const BoxRegion& box = config.region();
  const int n = box.radius();
  if (n > kMaxSampleRadius) throw Error(ErrorCode::usage, "box radius too large for the sampler");
  if (attempt > 0xFFFFFFFFull) throw Error(ErrorCode::budget_exceeded, "attempt counter overflow");
  const PhiloxKey key = philox_key(seed);
  const int L = box.side();
  std::vector<std::uint64_t> scratch;
  std::uint64_t* dst = config.words().data();
  for (int row = 0; row < L; ++row) {
    const int y = row - n;
    fill_segment(dst, box.horizontal_edge(0, row), -n, y, Orientation::horizontal,
                 static_cast<std::size_t>(L - 1), p, key, static_cast<std::uint32_t>(attempt),
                 replica, scratch);
    if (row + 1 < L)
      fill_segment(dst, box.vertical_edge(0, row), -n, y, Orientation::vertical,
                   static_cast<std::size_t>(L), p, key, static_cast<std::uint32_t>(attempt),
                   replica, scratch);
  }
  config.set_provenance({seed, replica, attempt, p});
}

Configuration sample_configuration(const BoxRegion& region, double p, std::uint64_t seed,
                                   std::uint64_t replica, std::uint64_t attempt) {
  Configuration c(region);
  resample(c, p, seed, replica, attempt);
  return c;
}

}  // namespace perc
