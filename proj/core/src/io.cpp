#include "fractalp/io.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace fractalp {

std::string format_g17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out << ',';
    out << header[i];
  }
  out << '\n';
  for (const std::vector<double>& row : rows) {
    if (row.size() != header.size())
      throw std::invalid_argument("csv row width does not match the header");
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << format_g17(row[i]);
    }
    out << '\n';
  }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << j.dump(2) << '\n';
}

std::uint64_t config_hash(const nlohmann::json& config) {
  // nlohmann objects keep their keys sorted, so dump() is already canonical
  const std::string s = config.dump();
  std::uint64_t h = 14695981039346656037ull;
  for (char ch : s) {
    h ^= static_cast<unsigned char>(ch);
    h *= 1099511628211ull;
  }
  return h;
}

nlohmann::json make_manifest(const nlohmann::json& config, std::uint64_t seed) {
  nlohmann::json m;
  m["config_hash"] = config_hash(config);
  m["seed"] = seed;
  m["versions"] = {{"core", "0.1.0"}, {"format", 1}};
  return m;
}

}  // namespace fractalp
