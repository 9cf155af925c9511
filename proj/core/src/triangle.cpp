#include "chainladder/triangle.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string_view>

#include "chainladder/error.hpp"

namespace chainladder {

namespace {

void check_n(int n) {
  if (n < 2) throw std::invalid_argument("triangle size must be at least 2");
}

void check_amount(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("claim amount is not finite");
  if (v < 0.0) throw std::invalid_argument("claim amount is negative");
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_number(std::string_view field, std::size_t line) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = field.data() + field.size();
  if (!field.empty() && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ParseError("line " + std::to_string(line) + ": non-numeric field '" +
                     std::string(field) + "'");
  }
  return value;
}

// Splits each non-blank line into numeric fields, dropping empty trailing fields.
std::vector<std::vector<double>> read_rows(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view rest = trim(line);
    if (rest.empty()) continue;
    std::vector<std::string_view> fields;
    while (true) {
      const auto comma = rest.find(',');
      fields.push_back(trim(rest.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    while (!fields.empty() && fields.back().empty()) fields.pop_back();
    std::vector<double> row;
    row.reserve(fields.size());
    for (auto f : fields) {
      if (f.empty()) {
        throw ParseError("line " + std::to_string(line_no) + ": empty field inside row");
      }
      row.push_back(parse_number(f, line_no));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::size_t cell_index(int n, Cell cell) {
  if (cell.row < 1 || cell.col < 1 || cell.row + cell.col > n + 1) {
    throw std::out_of_range("cell outside the observed triangle");
  }
  // Rows 1..i-1 hold n, n-1, ..., n-i+2 cells.
  const auto i = static_cast<std::size_t>(cell.row - 1);
  const auto nn = static_cast<std::size_t>(n);
  return i * nn - i * (i - 1) / 2 + static_cast<std::size_t>(cell.col - 1);
}

Cell cell_at(int n, std::size_t index) {
  int row = 1;
  std::size_t remaining = index;
  while (row <= n) {
    const auto len = static_cast<std::size_t>(n - row + 1);
    if (remaining < len) return {row, static_cast<int>(remaining) + 1};
    remaining -= len;
    ++row;
  }
  throw std::out_of_range("cell index past the observed triangle");
}

std::vector<Cell> observed_cells(int n) {
  std::vector<Cell> cells;
  cells.reserve(observed_count(n));
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n - i + 1; ++j) cells.push_back({i, j});
  return cells;
}

std::vector<Cell> future_cells(int n) {
  std::vector<Cell> cells;
  for (int i = 2; i <= n; ++i)
    for (int j = n - i + 2; j <= n; ++j) cells.push_back({i, j});
  return cells;
}

bool is_corner(int n, Cell cell) {
  return (cell.row == 1 && cell.col == n) || (cell.row == n && cell.col == 1);
}

// --- Triangle ---------------------------------------------------------------

Triangle::Triangle(int n, std::vector<double> values) : n_(n), values_(std::move(values)) {
  check_n(n);
  if (values_.size() != observed_count(n)) {
    throw std::invalid_argument("triangle expects " + std::to_string(observed_count(n)) +
                                " values, got " + std::to_string(values_.size()));
  }
  for (double v : values_) check_amount(v);
}

double Triangle::operator()(int row, int col) const { return values_[cell_index(n_, {row, col})]; }

Eigen::VectorXd Triangle::as_vector() const {
  return Eigen::Map<const Eigen::VectorXd>(values_.data(), static_cast<Eigen::Index>(values_.size()));
}

Triangle Triangle::with_value(Cell cell, double value) const {
  auto copy = values_;
  copy[cell_index(n_, cell)] = value;
  return Triangle(n_, std::move(copy));
}

Triangle Triangle::with_scaled(Cell cell, double factor) const {
  return with_value(cell, at(cell) * factor);
}

Triangle Triangle::scaled(double factor) const {
  auto copy = values_;
  for (double& v : copy) v *= factor;
  return Triangle(n_, std::move(copy));
}

// --- FullSquare -------------------------------------------------------------

FullSquare::FullSquare(int n, std::vector<double> values) : n_(n), values_(std::move(values)) {
  check_n(n);
  if (values_.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n)) {
    throw std::invalid_argument("square expects n*n values");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw std::invalid_argument("square amount is not finite");
  }
}

double FullSquare::operator()(int row, int col) const {
  return values_[static_cast<std::size_t>((row - 1) * n_ + (col - 1))];
}

double& FullSquare::operator()(int row, int col) {
  return values_[static_cast<std::size_t>((row - 1) * n_ + (col - 1))];
}

Triangle FullSquare::upper() const {
  std::vector<double> v;
  v.reserve(observed_count(n_));
  for (const Cell c : observed_cells(n_)) v.push_back((*this)(c.row, c.col));
  return Triangle(n_, std::move(v));
}

// --- Design -----------------------------------------------------------------

int row_parameter(int row) { return row - 1; }
int col_parameter(int n, int col) { return n + col - 2; }

DesignMatrix design_matrix(int n) { return design_matrix(n, observed_cells(n)); }

DesignMatrix design_matrix(int n, std::vector<Cell> cells) {
  check_n(n);
  DesignMatrix d;
  d.n = n;
  d.x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cells.size()), parameter_count(n));
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const Cell c = cells[k];
    if (c.row < 1 || c.row > n || c.col < 1 || c.col > n) {
      throw std::out_of_range("design cell outside the square");
    }
    const auto r = static_cast<Eigen::Index>(k);
    d.x(r, 0) = 1.0;
    if (c.row >= 2) d.x(r, row_parameter(c.row)) = 1.0;
    if (c.col >= 2) d.x(r, col_parameter(n, c.col)) = 1.0;
  }
  d.cells = std::move(cells);
  return d;
}

double linear_predictor(const Eigen::VectorXd& theta, int n, Cell cell) {
  double eta = theta(0);
  if (cell.row >= 2) eta += theta(row_parameter(cell.row));
  if (cell.col >= 2) eta += theta(col_parameter(n, cell.col));
  return eta;
}

// --- CSV --------------------------------------------------------------------

Triangle parse_csv(std::istream& in, const CsvOptions& options) {
  const auto rows = read_rows(in);
  const int n = static_cast<int>(rows.size());
  if (n < 2) throw ParseError("a triangle needs at least two rows");
  std::vector<double> values;
  values.reserve(observed_count(n));
  for (int i = 1; i <= n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i - 1)];
    const auto expected = static_cast<std::size_t>(n - i + 1);
    if (row.size() != expected) {
      throw ParseError("ragged rows: row " + std::to_string(i) + " has " + std::to_string(row.size()) +
                       " fields, a " + std::to_string(n) + "-row triangle needs " +
                       std::to_string(expected));
    }
    for (double v : row) {
      if (!std::isfinite(v)) throw ParseError("row " + std::to_string(i) + ": non-finite amount");
      if (v < 0.0) throw ParseError("row " + std::to_string(i) + ": negative claim amount");
      values.push_back(v);
    }
  }
  Triangle tri(n, std::move(values));
  return options.cumulative ? decumulate(tri) : tri;
}

Triangle parse_csv_string(const std::string& text, const CsvOptions& options) {
  std::istringstream in(text);
  return parse_csv(in, options);
}

Triangle read_triangle(const std::string& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open triangle file '" + path + "'");
  return parse_csv(in, options);
}

FullSquare parse_square_csv(std::istream& in) {
  const auto rows = read_rows(in);
  const int n = static_cast<int>(rows.size());
  if (n < 2) throw ParseError("a square needs at least two rows");
  std::vector<double> values;
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != n) throw ParseError("square rows must have n fields");
    values.insert(values.end(), row.begin(), row.end());
  }
  return FullSquare(n, std::move(values));
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

std::string to_csv(const Triangle& triangle) {
  std::string out;
  const int n = triangle.n();
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= n - i + 1; ++j) {
      if (j > 1) out += ',';
      out += format_double(triangle(i, j));
    }
    out += '\n';
  }
  return out;
}

std::string to_csv(const FullSquare& square) {
  std::string out;
  for (int i = 1; i <= square.n(); ++i) {
    for (int j = 1; j <= square.n(); ++j) {
      if (j > 1) out += ',';
      out += format_double(square(i, j));
    }
    out += '\n';
  }
  return out;
}

Triangle cumulate(const Triangle& triangle) {
  const int n = triangle.n();
  std::vector<double> v(triangle.values().begin(), triangle.values().end());
  for (int i = 1; i <= n; ++i) {
    for (int j = 2; j <= n - i + 1; ++j) {
      v[cell_index(n, {i, j})] += v[cell_index(n, {i, j - 1})];
    }
  }
  return Triangle(n, std::move(v));
}

Triangle decumulate(const Triangle& cumulative) {
  const int n = cumulative.n();
  std::vector<double> v(cumulative.values().begin(), cumulative.values().end());
  for (int i = 1; i <= n; ++i) {
    for (int j = n - i + 1; j >= 2; --j) {
      const double inc = cumulative(i, j) - cumulative(i, j - 1);
      if (inc < 0.0) {
        throw ParseError("cumulative row " + std::to_string(i) + " decreases at column " +
                         std::to_string(j));
      }
      v[cell_index(n, {i, j})] = inc;
    }
  }
  return Triangle(n, std::move(v));
}

double true_reserve(const FullSquare& square) {
  double total = 0.0;
  for (const Cell c : future_cells(square.n())) total += square(c.row, c.col);
  return total;
}

}  // namespace chainladder
