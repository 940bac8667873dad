#include "sgfem/paramkit.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "sgfem/errors.hpp"

namespace sgfem::param {

MultiIndex::MultiIndex(std::vector<Entry> entries) {
  std::erase_if(entries, [](const Entry& e) { return e.second == 0; });
  std::sort(entries.begin(), entries.end());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].first == 0) throw InputDomainError("multi-index: dimensions start at 1");
    if (i > 0 && entries[i].first == entries[i - 1].first) {
      throw InputDomainError("multi-index: repeated dimension " + std::to_string(entries[i].first));
    }
  }
  entries_ = std::move(entries);
}

MultiIndex MultiIndex::unit(std::uint32_t dimension, std::uint32_t degree) {
  return MultiIndex({{dimension, degree}});
}

std::uint32_t MultiIndex::degree(std::uint32_t dimension) const {
  const auto it = std::lower_bound(entries_.begin(), entries_.end(), Entry{dimension, 0});
  return (it != entries_.end() && it->first == dimension) ? it->second : 0;
}

std::uint32_t MultiIndex::total_degree() const {
  std::uint32_t s = 0;
  for (const auto& e : entries_) s += e.second;
  return s;
}

std::optional<MultiIndex> MultiIndex::shifted(std::uint32_t dimension, int delta) const {
  const auto current = static_cast<long long>(degree(dimension));
  const long long next = current + delta;
  if (next < 0) return std::nullopt;
  MultiIndex out;
  out.entries_.reserve(entries_.size() + 1);
  bool placed = false;
  for (const auto& e : entries_) {
    if (!placed && e.first >= dimension) {
      if (next > 0) out.entries_.emplace_back(dimension, static_cast<std::uint32_t>(next));
      placed = true;
      if (e.first == dimension) continue;
    }
    out.entries_.push_back(e);
  }
  if (!placed && next > 0) out.entries_.emplace_back(dimension, static_cast<std::uint32_t>(next));
  return out;
}

std::string MultiIndex::to_string() const {
  if (entries_.empty()) return "-";
  std::string s;
  for (const auto& [m, d] : entries_) {
    if (!s.empty()) s += ' ';
    s += std::to_string(m) + ':' + std::to_string(d);
  }
  return s;
}

MultiIndex MultiIndex::parse(std::string_view text) {
  std::vector<Entry> entries;
  std::istringstream in{std::string(text)};
  std::string token;
  while (in >> token) {
    if (token == "-") continue;
    const auto colon = token.find(':');
    std::uint32_t m = 0, d = 0;
    if (colon == std::string::npos ||
        std::from_chars(token.data(), token.data() + colon, m).ec != std::errc{} ||
        std::from_chars(token.data() + colon + 1, token.data() + token.size(), d).ec != std::errc{}) {
      throw InputDomainError("multi-index: cannot parse '" + token + "'");
    }
    entries.emplace_back(m, d);
  }
  return MultiIndex(std::move(entries));
}

std::size_t MultiIndexHash::operator()(const MultiIndex& nu) const noexcept {
  std::size_t h = 0x9e3779b97f4a7c15ull;
  for (const auto& [m, d] : nu.entries()) {
    h ^= (static_cast<std::size_t>(m) << 20 | d) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  }
  return h;
}

bool canonical_less(const MultiIndex& a, const MultiIndex& b) {
  const auto da = a.total_degree(), db = b.total_degree();
  if (da != db) return da < db;
  return std::lexicographical_compare(a.entries().begin(), a.entries().end(), b.entries().begin(),
                                      b.entries().end());
}

IndexSet::IndexSet(std::vector<MultiIndex> members) {
  members_.reserve(members.size());
  for (auto& nu : members) {
    if (position_.count(nu)) throw InputDomainError("index set: duplicate member " + nu.to_string());
    position_.emplace(nu, members_.size());
    members_.push_back(std::move(nu));
  }
}

IndexSet IndexSet::initial() { return IndexSet({MultiIndex{}}); }

std::optional<std::size_t> IndexSet::find(const MultiIndex& nu) const {
  const auto it = position_.find(nu);
  if (it == position_.end()) return std::nullopt;
  return it->second;
}

IndexSet IndexSet::united(std::span<const MultiIndex> added) const {
  std::vector<MultiIndex> fresh;
  for (const auto& nu : added) {
    if (!contains(nu) && std::find(fresh.begin(), fresh.end(), nu) == fresh.end()) fresh.push_back(nu);
  }
  std::sort(fresh.begin(), fresh.end(), canonical_less);
  std::vector<MultiIndex> all = members_;
  all.insert(all.end(), fresh.begin(), fresh.end());
  return IndexSet(std::move(all));
}

bool IndexSet::includes(const IndexSet& other) const {
  return std::all_of(other.begin(), other.end(), [&](const MultiIndex& nu) { return contains(nu); });
}

std::uint32_t active_dimension(const IndexSet& indices) {
  std::uint32_t m = 0;
  for (const auto& nu : indices) m = std::max(m, nu.max_dimension());
  return m;
}

IndexSet detail_index_set(const IndexSet& indices) {
  const std::uint32_t limit = active_dimension(indices) + 1;
  std::vector<MultiIndex> found;
  std::unordered_map<MultiIndex, bool, MultiIndexHash> seen;
  for (const auto& nu : indices) {
    for (std::uint32_t m = 1; m <= limit; ++m) {
      for (int delta : {+1, -1}) {
        auto mu = nu.shifted(m, delta);
        if (!mu || indices.contains(*mu) || seen.count(*mu)) continue;
        seen.emplace(*mu, true);
        found.push_back(std::move(*mu));
      }
    }
  }
  std::sort(found.begin(), found.end(), canonical_less);
  return IndexSet(std::move(found));
}

double legendre(std::uint32_t n, double y) {
  if (n == 0) return 1.0;
  double prev = 1.0;
  double cur = std::sqrt(3.0) * y;
  for (std::uint32_t k = 1; k < n; ++k) {
    const double next = (y * cur - coupling_coefficient(k) * prev) / coupling_coefficient(k + 1);
    prev = cur;
    cur = next;
  }
  return cur;
}

double coupling_coefficient(std::uint32_t n) {
  if (n == 0) throw InputDomainError("coupling coefficient: degree must be >= 1");
  const double d = n;
  return d / std::sqrt(4.0 * d * d - 1.0);
}

std::string dump(const IndexSet& indices) {
  std::string s;
  for (const auto& nu : indices) {
    s += nu.to_string();
    s += '\n';
  }
  return s;
}

IndexSet parse_dump(std::string_view text) {
  std::vector<MultiIndex> members;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    members.push_back(MultiIndex::parse(line));
  }
  return IndexSet(std::move(members));
}

}  // namespace sgfem::param
