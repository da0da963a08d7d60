#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string_view>

#include <json.hpp>

#include "flipforge/error.hpp"
#include "flipforge/io.hpp"

namespace flipforge {

namespace {

using json = nlohmann::json;

struct CsvTable {
  std::vector<std::vector<double>> rows;
};

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spill(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << text;
  if (!out) throw InvalidInput("write failed for " + path.string());
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Numeric CSV; blank lines are skipped. Errors carry line and byte offset.
CsvTable parse_csv(const std::string& text, const std::string& what) {
  CsvTable table;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    ++line_no;
    const std::size_t eol = std::min(text.find('\n', pos), text.size());
    const std::string_view line(text.data() + pos, eol - pos);
    if (!trim(line).empty()) {
      std::vector<double> row;
      std::size_t field_start = 0;
      while (true) {
        const std::size_t comma = line.find(',', field_start);
        const std::size_t field_end = comma == std::string_view::npos ? line.size() : comma;
        std::string_view field = line.substr(field_start, field_end - field_start);
        const std::size_t lead = std::min(field.find_first_not_of(" \t"), field.size());
        field = trim(field);
        if (!field.empty() && field.front() == '+') field.remove_prefix(1);
        double value = 0.0;
        const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
        if (field.empty() || ec != std::errc() || ptr != field.data() + field.size())
          throw ParseError("malformed number in " + what, line_no, pos + field_start + lead);
        row.push_back(value);
        if (comma == std::string_view::npos) break;
        field_start = comma + 1;
      }
      table.rows.push_back(std::move(row));
    }
    pos = eol + 1;
  }
  return table;
}

std::vector<double> single_column(const std::filesystem::path& path, const std::string& what) {
  const CsvTable table = parse_csv(slurp(path), what);
  std::vector<double> values;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    if (table.rows[r].size() != 1)
      throw InvalidInput(what + " must have exactly one column", r);
    values.push_back(table.rows[r][0]);
  }
  if (values.empty()) throw InvalidInput(what + " is empty");
  return values;
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::filesystem::path metadata_path(const std::filesystem::path& csv_path) {
  return std::filesystem::path(csv_path.string() + ".meta.json");
}

void write_dictionary(const std::filesystem::path& path, const FlipDictionary& dict,
                      DictionaryMeta meta) {
  const Matrix& V = dict.matrix();
  std::string text;
  for (Eigen::Index r = 0; r < V.rows(); ++r) {
    for (Eigen::Index c = 0; c < V.cols(); ++c) {
      if (c) text += ',';
      text += format_double(V(r, c));
    }
    text += '\n';
  }
  spill(path, text);

  json j;
  j["beta"] = dict.beta();
  j["d"] = V.rows();
  j["n"] = V.cols();
  j["source"] = meta.source;
  if (meta.seed) j["seed"] = *meta.seed;
  const auto coherence = meta.coherence ? meta.coherence : dict.cached_coherence();
  if (coherence) j["coherence"] = *coherence;
  spill(metadata_path(path), j.dump(2) + "\n");
}

FlipDictionary read_dictionary(const std::filesystem::path& path, DictionaryMeta* meta_out) {
  const CsvTable table = parse_csv(slurp(path), "dictionary");
  if (table.rows.empty()) throw InvalidInput("dictionary file is empty");
  const std::size_t n = table.rows.front().size();
  Matrix V(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    if (table.rows[r].size() != n)
      throw InvalidInput("dictionary row has " + std::to_string(table.rows[r].size()) +
                             " columns, expected " + std::to_string(n),
                         r);
    for (std::size_t c = 0; c < n; ++c)
      V(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = table.rows[r][c];
  }

  DictionaryMeta meta;
  meta.d = table.rows.size();
  meta.n = n;
  const auto mpath = metadata_path(path);
  if (std::filesystem::exists(mpath)) {
    const std::string text = slurp(mpath);
    json j;
    try {
      j = json::parse(text);
      meta.beta = j.at("beta").get<double>();
      if (j.at("d").get<std::size_t>() != meta.d || j.at("n").get<std::size_t>() != meta.n)
        throw InvalidInput("dictionary metadata d/n disagree with the CSV shape");
      meta.source = j.value("source", std::string{});
      if (j.contains("seed")) meta.seed = j["seed"].get<std::uint64_t>();
      if (j.contains("coherence")) meta.coherence = j["coherence"].get<double>();
    } catch (const json::parse_error& e) {
      const auto upto = text.begin() + static_cast<std::ptrdiff_t>(std::min(e.byte, text.size()));
      throw ParseError(std::string("dictionary metadata: ") + e.what(),
                       1 + static_cast<std::size_t>(std::count(text.begin(), upto, '\n')), e.byte);
    } catch (const json::exception& e) {
      throw InvalidInput(std::string("dictionary metadata: ") + e.what());
    }
  }
  if (meta_out) *meta_out = meta;
  return FlipDictionary(std::move(V), meta.beta, meta.coherence);
}

std::vector<Comparison> read_comparisons(const std::filesystem::path& path) {
  const CsvTable table = parse_csv(slurp(path), "comparison dataset");
  if (table.rows.empty()) throw InvalidInput("comparison dataset is empty");
  std::vector<Comparison> out;
  const std::size_t width = table.rows.front().size();
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (row.size() < 2) throw InvalidInput("comparison row needs a label and features", r);
    if (row.size() != width) throw InvalidInput("comparison rows have inconsistent width", r);
    if (row[0] != 1.0 && row[0] != -1.0) throw InvalidInput("label must be +1 or -1", r);
    Comparison c;
    c.label = row[0] > 0 ? 1 : -1;
    c.delta_psi = Eigen::Map<const Vector>(row.data() + 1, static_cast<Eigen::Index>(row.size() - 1));
    out.push_back(std::move(c));
  }
  return out;
}

void write_comparisons(const std::filesystem::path& path, const std::vector<Comparison>& data) {
  std::string text;
  for (const Comparison& c : data) {
    text += c.label > 0 ? "1" : "-1";
    for (Eigen::Index k = 0; k < c.delta_psi.size(); ++k) text += ',' + format_double(c.delta_psi[k]);
    text += '\n';
  }
  spill(path, text);
}

Vector read_vector(const std::filesystem::path& path) {
  const std::vector<double> values = single_column(path, "vector file");
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

void write_vector(const std::filesystem::path& path, const Vector& v) {
  std::string text;
  for (Eigen::Index i = 0; i < v.size(); ++i) text += format_double(v[i]) + '\n';
  spill(path, text);
}

FlipVector read_flips(const std::filesystem::path& path) {
  const std::vector<double> values = single_column(path, "flip file");
  FlipVector flips;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] != 0.0 && values[i] != 1.0) throw InvalidInput("flip entries must be 0 or 1", i);
    flips.push_back(static_cast<int>(values[i]));
  }
  return flips;
}

void write_flips(const std::filesystem::path& path, const FlipVector& flips) {
  std::string text;
  for (int f : flips) text += f ? "1\n" : "0\n";
  spill(path, text);
}

}  // namespace flipforge
