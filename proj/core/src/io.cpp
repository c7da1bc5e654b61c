#include "cia/io.hpp"

#include "cia/errors.hpp"
#include "json_support.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>
#include <vector>

namespace cia {

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

namespace {

std::string header(std::string_view prefix, Eigen::Index columns) {
  std::string out = "cell_start,cell_end";
  for (Eigen::Index i = 0; i < columns; ++i) {
    out += ',';
    out += prefix;
    out += '_';
    out += std::to_string(i + 1);
  }
  out += '\n';
  return out;
}

std::string rows(const RoundingGrid& grid, const Eigen::MatrixXd& values) {
  std::string out;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    out += format_double(grid.start(k));
    out += ',';
    out += format_double(grid.end(k));
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
      out += ',';
      out += format_double(values(i, static_cast<Eigen::Index>(k)));
    }
    out += '\n';
  }
  return out;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = line.find(sep, pos);
    out.push_back(line.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_number(std::string_view field) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double x = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), x);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    throw Error(ErrorCode::kInvalidArgument, "malformed number '" + std::string(field) + "' in CSV");
  }
  return x;
}

struct CsvTable {
  std::vector<std::vector<double>> rows;
  std::size_t columns = 0;
};

CsvTable parse_table(std::string_view text) {
  CsvTable table;
  bool seen_header = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t next = text.find('\n', pos);
    std::string_view line = trim(text.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
    pos = next == std::string_view::npos ? text.size() + 1 : next + 1;
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (!seen_header) {
      if (fields.size() < 2 || trim(fields[0]) != "cell_start" || trim(fields[1]) != "cell_end") {
        throw Error(ErrorCode::kInvalidArgument, "CSV header must start with cell_start,cell_end");
      }
      table.columns = fields.size();
      seen_header = true;
      continue;
    }
    if (fields.size() != table.columns) throw Error(ErrorCode::kInvalidArgument, "CSV row has the wrong number of fields");
    std::vector<double> row;
    for (auto f : fields) row.push_back(parse_number(f));
    table.rows.push_back(std::move(row));
  }
  if (!seen_header) throw Error(ErrorCode::kInvalidArgument, "CSV is empty");
  if (table.rows.empty()) throw Error(ErrorCode::kInvalidArgument, "CSV has no cells");
  return table;
}

RoundingGrid grid_of(const CsvTable& table) {
  std::vector<double> b{table.rows.front()[0]};
  const double span = table.rows.back()[1] - table.rows.front()[0];
  for (const auto& row : table.rows) {
    if (std::abs(row[0] - b.back()) > 1e-12 * std::max(1.0, std::abs(span))) {
      throw Error(ErrorCode::kInvalidArgument, "CSV cells are not contiguous");
    }
    b.push_back(row[1]);
  }
  return RoundingGrid(std::move(b));
}

}  // namespace

std::string control_to_csv(const PiecewiseConstantControl& v, std::string_view prefix) {
  return header(prefix, v.dim()) + rows(v.grid(), v.values());
}

std::string control_to_csv(const RelaxedControl& alpha) { return control_to_csv(alpha.as_control(), "alpha"); }

std::string control_to_csv(const BinaryControl& omega) { return control_to_csv(omega.as_control(), "alpha"); }

PiecewiseConstantControl control_from_csv(std::string_view text) {
  const CsvTable table = parse_table(text);
  if (table.columns < 3) throw Error(ErrorCode::kInvalidArgument, "control CSV needs at least one value column");
  RoundingGrid grid = grid_of(table);
  Eigen::MatrixXd values(static_cast<Eigen::Index>(table.columns - 2), static_cast<Eigen::Index>(table.rows.size()));
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    for (std::size_t i = 2; i < table.columns; ++i) {
      values(static_cast<Eigen::Index>(i - 2), static_cast<Eigen::Index>(k)) = table.rows[k][i];
    }
  }
  return {std::move(grid), std::move(values)};
}

RoundingGrid grid_from_csv(std::string_view text) { return grid_of(parse_table(text)); }

RegularizerSpec spec_from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("spec JSON: ") + e.what());
  }
  return detail::spec_from_json_value(doc);
}

namespace detail {

RegularizerSpec spec_from_json_value(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("bangs") || !doc.contains("weights")) {
    throw Error(ErrorCode::kInvalidArgument, "spec needs \"bangs\" and \"weights\"");
  }
  const auto& bangs = doc.at("bangs");
  const auto& weights = doc.at("weights");
  if (!bangs.is_array() || !weights.is_array() || bangs.size() != weights.size() || bangs.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "\"bangs\" and \"weights\" must be arrays of equal length");
  }
  try {
    const std::size_t m = bangs[0].is_array() ? bangs[0].size() : 1;
    Eigen::MatrixXd v(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(bangs.size()));
    Eigen::VectorXd g(static_cast<Eigen::Index>(weights.size()));
    for (std::size_t j = 0; j < bangs.size(); ++j) {
      const auto& b = bangs[j];
      if (b.is_array()) {
        if (b.size() != m) throw Error(ErrorCode::kInvalidArgument, "all bangs must have the same dimension");
        for (std::size_t i = 0; i < m; ++i) v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = b[i].get<double>();
      } else {
        if (m != 1) throw Error(ErrorCode::kInvalidArgument, "all bangs must have the same dimension");
        v(0, static_cast<Eigen::Index>(j)) = b.get<double>();
      }
      g(static_cast<Eigen::Index>(j)) = weights[j].get<double>();
    }
    return RegularizerSpec::create(std::move(v), std::move(g));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("spec JSON: ") + e.what());
  }
}

}  // namespace detail

std::string spec_to_json(const RegularizerSpec& spec) {
  nlohmann::json doc;
  doc["bangs"] = nlohmann::json::array();
  for (Eigen::Index j = 0; j < spec.count(); ++j) {
    auto b = nlohmann::json::array();
    for (Eigen::Index i = 0; i < spec.dim(); ++i) b.push_back(spec.bangs()(i, j));
    doc["bangs"].push_back(b);
  }
  doc["weights"] = std::vector<double>(spec.weights().data(), spec.weights().data() + spec.count());
  return doc.dump();
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(ErrorCode::kIoError, "failed writing " + path.string());
}

}  // namespace cia
