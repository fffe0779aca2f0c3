#include "ema/gradient_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

namespace ema {

namespace {

constexpr char kMagic[4] = {'E', 'M', 'A', 'G'};
constexpr std::uint16_t kVersion = 1;

template <typename T>
void put_le(std::ostream& os, T value) {
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i)
    buf[i] = static_cast<unsigned char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
  unsigned char buf[sizeof(T)];
  is.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!is) throw Error(ErrorCode::IoError, "truncated EMAG file");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return static_cast<T>(v);
}

void put_f64_le(std::ostream& os, double d) { put_le(os, std::bit_cast<std::uint64_t>(d)); }
double get_f64_le(std::istream& is) { return std::bit_cast<double>(get_le<std::uint64_t>(is)); }

std::string format_double(double d) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), d);
  return std::string(buf, ptr);
}

double parse_double(std::string_view s) {
  double d = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), d);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw Error(ErrorCode::IoError, "bad number in CSV: '" + std::string(s) + "'");
  return d;
}

std::vector<const ClientUpdate*> by_client_id(const std::vector<ClientUpdate>& updates) {
  std::vector<const ClientUpdate*> order;
  order.reserve(updates.size());
  for (const auto& u : updates) order.push_back(&u);
  std::sort(order.begin(), order.end(),
            [](const ClientUpdate* a, const ClientUpdate* b) { return a->client_id < b->client_id; });
  return order;
}

}  // namespace

void save_round_binary(const std::filesystem::path& path, const std::vector<ClientUpdate>& updates) {
  if (updates.empty()) throw Error(ErrorCode::EmptyRound, "nothing to dump");
  const std::size_t d = updates.front().gradient.dim();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  os.write(kMagic, 4);
  put_le(os, kVersion);
  put_le(os, static_cast<std::uint64_t>(d));
  put_le(os, static_cast<std::uint32_t>(updates.size()));
  for (const ClientUpdate* u : by_client_id(updates)) {
    if (u->gradient.dim() != d) throw Error(ErrorCode::DimensionMismatch, "ragged round");
    for (double v : u->gradient.values) put_f64_le(os, v);
  }
  if (!os) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

std::vector<ClientUpdate> load_round_binary(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw Error(ErrorCode::IoError, "not an EMAG file: " + path.string());
  const auto version = get_le<std::uint16_t>(is);
  if (version != kVersion)
    throw Error(ErrorCode::IoError, "unsupported EMAG version " + std::to_string(version));
  const auto d = static_cast<std::size_t>(get_le<std::uint64_t>(is));
  const auto n = static_cast<std::size_t>(get_le<std::uint32_t>(is));
  if (d == 0 || n == 0) throw Error(ErrorCode::IoError, "empty EMAG dump");

  std::vector<ClientUpdate> updates(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> row(d);
    for (std::size_t j = 0; j < d; ++j) row[j] = get_f64_le(is);
    updates[i].client_id = static_cast<std::uint32_t>(i);
    updates[i].gradient = GradientVector::flat(std::move(row));
  }
  return updates;
}

void save_round_csv(const std::filesystem::path& path, const std::vector<ClientUpdate>& updates) {
  if (updates.empty()) throw Error(ErrorCode::EmptyRound, "nothing to dump");
  const std::size_t d = updates.front().gradient.dim();
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  os << "client_id";
  for (std::size_t j = 0; j < d; ++j) os << ",coord_" << j;
  os << "\n";
  for (const ClientUpdate* u : by_client_id(updates)) {
    if (u->gradient.dim() != d) throw Error(ErrorCode::DimensionMismatch, "ragged round");
    os << u->client_id;
    for (double v : u->gradient.values) os << ',' << format_double(v);
    os << "\n";
  }
  if (!os) throw Error(ErrorCode::IoError, "write failed: " + path.string());
}

std::vector<ClientUpdate> load_round_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line) || line.rfind("client_id,", 0) != 0)
    throw Error(ErrorCode::IoError, "missing CSV header in " + path.string());

  std::vector<ClientUpdate> updates;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string_view> cells;
    std::string_view rest(line);
    while (!rest.empty()) {
      const auto pos = rest.find(',');
      cells.push_back(rest.substr(0, pos));
      if (pos == std::string_view::npos) break;
      rest.remove_prefix(pos + 1);
    }
    if (cells.size() < 2) throw Error(ErrorCode::IoError, "short CSV row");
    ClientUpdate u;
    u.client_id = static_cast<std::uint32_t>(parse_double(cells[0]));
    std::vector<double> row(cells.size() - 1);
    for (std::size_t j = 1; j < cells.size(); ++j) row[j - 1] = parse_double(cells[j]);
    u.gradient = GradientVector::flat(std::move(row));
    updates.push_back(std::move(u));
  }
  if (updates.empty()) throw Error(ErrorCode::EmptyRound, "no data rows in " + path.string());
  return updates;
}

std::vector<ClientUpdate> load_round(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  char magic[4] = {0, 0, 0, 0};
  is.read(magic, 4);
  is.close();
  if (std::memcmp(magic, kMagic, 4) == 0) return load_round_binary(path);
  return load_round_csv(path);
}

}  // namespace ema
