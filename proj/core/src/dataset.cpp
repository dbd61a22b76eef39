#include "rhogap/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "rhogap/errors.hpp"

namespace rhogap {

Dataset::Dataset(std::size_t state_dim, std::size_t input_dim, std::string provenance)
    : dx_(state_dim), du_(input_dim), provenance_(std::move(provenance)) {
  if (dx_ == 0) throw InvalidArgument("dataset: state dimension must be positive");
}

void Dataset::add(LabeledSample sample) {
  if (static_cast<std::size_t>(sample.z.size()) != dx_ + du_ ||
      static_cast<std::size_t>(sample.y.size()) != dx_) {
    throw InvalidArgument("dataset: sample has dim(z)=" + std::to_string(sample.z.size()) +
                          ", dim(y)=" + std::to_string(sample.y.size()) + "; expected " +
                          std::to_string(dx_ + du_) + " and " + std::to_string(dx_));
  }
  if (!sample.z.allFinite() || !sample.y.allFinite()) {
    throw InvalidArgument("dataset: sample contains non-finite values");
  }
  samples_.push_back(std::move(sample));
}

void Dataset::add(VectorRef x, VectorRef u, VectorRef y) {
  Vector z(x.size() + u.size());
  z << x, u;
  add(LabeledSample{std::move(z), Vector(y)});
}

PointMatrix Dataset::inputs() const {
  PointMatrix Z(static_cast<Eigen::Index>(samples_.size()), static_cast<Eigen::Index>(dx_ + du_));
  for (std::size_t n = 0; n < samples_.size(); ++n) {
    Z.row(static_cast<Eigen::Index>(n)) = samples_[n].z.transpose();
  }
  return Z;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out(dx_, du_, provenance_);
  out.samples_.reserve(indices.size());
  for (std::size_t idx : indices) {
    if (idx >= samples_.size()) {
      throw InvalidArgument("dataset: subset index " + std::to_string(idx) + " out of range");
    }
    out.samples_.push_back(samples_[idx]);
  }
  return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    std::size_t start = cell.find_first_not_of(' ');
    cells.push_back(start == std::string::npos ? std::string{} : cell.substr(start));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_number(const std::string& cell, std::size_t line_no) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last) {
    throw InvalidArgument("dataset csv line " + std::to_string(line_no) + ": cannot parse '" +
                          cell + "'");
  }
  if (!std::isfinite(v)) {
    throw InvalidArgument("dataset csv line " + std::to_string(line_no) + ": non-finite value '" +
                          cell + "'");
  }
  return v;
}

}  // namespace

Dataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open dataset file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("dataset file " + path.string() + " is empty");
  const auto header = split_csv_line(line);

  std::size_t dx = 0, du = 0, dy = 0;
  for (const auto& name : header) {
    const char kind = name.empty() ? '?' : name[0];
    std::size_t* counter = kind == 'x' ? &dx : kind == 'u' ? &du : kind == 'y' ? &dy : nullptr;
    if (counter == nullptr || name.substr(1) != std::to_string(*counter + 1)) {
      throw InvalidArgument("dataset header: unexpected column '" + name + "'");
    }
    ++*counter;
  }
  // Columns must come in x.., u.., y.. order.
  for (std::size_t c = 0; c < header.size(); ++c) {
    const char expected = c < dx ? 'x' : c < dx + du ? 'u' : 'y';
    if (header[c][0] != expected) throw InvalidArgument("dataset header: columns out of order");
  }
  if (dx == 0 || dy != dx) {
    throw InvalidArgument("dataset header: need x1..x{d} and y1..y{d} with equal d");
  }

  Dataset data(dx, du, path.filename().string());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw InvalidArgument("dataset csv line " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " columns, got " +
                            std::to_string(cells.size()));
    }
    LabeledSample s{Vector(static_cast<Eigen::Index>(dx + du)), Vector(static_cast<Eigen::Index>(dx))};
    for (std::size_t c = 0; c < dx + du; ++c) s.z(static_cast<Eigen::Index>(c)) = parse_number(cells[c], line_no);
    for (std::size_t c = 0; c < dx; ++c) {
      s.y(static_cast<Eigen::Index>(c)) = parse_number(cells[dx + du + c], line_no);
    }
    data.add(std::move(s));
  }
  return data;
}

void write_dataset_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write dataset file " + path.string());
  const std::size_t dx = data.state_dim(), du = data.input_dim();
  for (std::size_t j = 0; j < dx; ++j) out << (j ? "," : "") << 'x' << j + 1;
  for (std::size_t j = 0; j < du; ++j) out << ",u" << j + 1;
  for (std::size_t j = 0; j < dx; ++j) out << ",y" << j + 1;
  out << '\n' << std::setprecision(17);
  for (const auto& s : data.samples()) {
    for (Eigen::Index c = 0; c < s.z.size(); ++c) out << (c ? "," : "") << s.z(c);
    for (Eigen::Index c = 0; c < s.y.size(); ++c) out << ',' << s.y(c);
    out << '\n';
  }
}

}  // namespace rhogap
