#include "udasa/jsonl.hpp"

#include <charconv>
#include <fstream>

#include "udasa/errors.hpp"

namespace udasa {

namespace jsonl {

std::vector<ojson> load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in.good()) throw InvalidInput("cannot open " + path.string());
  std::vector<ojson> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(ojson::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw InvalidInput(path.string() + ":" + std::to_string(line_no) + ": malformed JSON: " +
                         e.what());
    }
  }
  return out;
}

bool nonempty(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in.good()) return false;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) return true;
  }
  return false;
}

void write_all(const std::filesystem::path& path, const std::vector<ojson>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out.good()) throw Error("cannot write " + path.string());
  for (const auto& r : records) out << r.dump() << '\n';
}

void append_all(const std::filesystem::path& path, const std::vector<ojson>& records) {
  std::ofstream out(path, std::ios::app);
  if (!out.good()) throw Error("cannot append to " + path.string());
  for (const auto& r : records) out << r.dump() << '\n';
}

}  // namespace jsonl

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace udasa
