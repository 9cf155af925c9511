/**
 * @file triangle.hpp
 * @brief Run-off triangle data model.
 *
 * A triangle of size n holds the incremental claim amounts Y(i, j) of
 * accident year i and development year j for the observed cells
 * i + j <= n + 1 (both indices 1-based). Every vector indexed by observed
 * cells in this library (fitted means, residuals, hat diagonals, resampling
 * pools) uses the same row-major order: i ascending, then j ascending.
 */
#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace chainladder {

/// Accident year (row) and development year (column), both 1-based.
struct Cell {
  int row = 0;
  int col = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
};

/// Number of observed cells of a size-n triangle, n(n+1)/2.
constexpr std::size_t observed_count(int n) {
  return static_cast<std::size_t>(n) * static_cast<std::size_t>(n + 1) / 2;
}

/// Number of parameters of the chain-ladder GLM, 2n - 1.
constexpr int parameter_count(int n) { return 2 * n - 1; }

/// Row-major position of an observed cell.
std::size_t cell_index(int n, Cell cell);

/// Inverse of cell_index.
Cell cell_at(int n, std::size_t index);

/// Observed cells (i + j <= n + 1) in row-major order.
std::vector<Cell> observed_cells(int n);

/// Future cells (i + j > n + 1) in row-major order.
std::vector<Cell> future_cells(int n);

/// The single-observation cells (1, n) and (n, 1).
bool is_corner(int n, Cell cell);

/// Incremental run-off triangle. Immutable once built except through the
/// explicit copy-with-modification helpers.
class Triangle {
 public:
  /// @p values holds the observed cells in row-major order. Throws
  /// std::invalid_argument on a size mismatch, n < 2, or a negative or
  /// non-finite amount.
  Triangle(int n, std::vector<double> values);

  int n() const { return n_; }
  std::size_t size() const { return values_.size(); }

  double operator()(int row, int col) const;
  double at(Cell cell) const { return (*this)(cell.row, cell.col); }

  std::span<const double> values() const { return values_; }
  Eigen::VectorXd as_vector() const;

  /// Copy with one cell replaced.
  Triangle with_value(Cell cell, double value) const;
  /// Copy with one cell multiplied by @p factor.
  Triangle with_scaled(Cell cell, double factor) const;
  /// Copy with every cell multiplied by @p factor.
  Triangle scaled(double factor) const;

  friend bool operator==(const Triangle&, const Triangle&) = default;

 private:
  int n_;
  std::vector<double> values_;
};

/// Complete n x n square of incremental amounts (upper and lower parts).
class FullSquare {
 public:
  FullSquare(int n, std::vector<double> values);

  int n() const { return n_; }
  double operator()(int row, int col) const;
  double& operator()(int row, int col);
  std::span<const double> values() const { return values_; }

  /// Observed upper-left triangle.
  Triangle upper() const;

  friend bool operator==(const FullSquare&, const FullSquare&) = default;

 private:
  int n_;
  std::vector<double> values_;
};

/// 0/1 design of the log-linear chain-ladder model over a list of cells.
///
/// Column 0 is the intercept, columns 1..n-1 the row indicators for
/// accident years 2..n and columns n..2n-2 the column indicators for
/// development years 2..n.
struct DesignMatrix {
  int n = 0;
  std::vector<Cell> cells;
  Eigen::MatrixXd x;

  Eigen::Index rows() const { return x.rows(); }
  Eigen::Index cols() const { return x.cols(); }
};

/// Design over the observed triangle, rows in row-major cell order.
DesignMatrix design_matrix(int n);

/// Design over an arbitrary list of cells of a size-n square.
DesignMatrix design_matrix(int n, std::vector<Cell> cells);

/// Parameter positions of the row and column effects.
int row_parameter(int row);
int col_parameter(int n, int col);

/// x' theta for one cell. Parameters equal to -inf yield -inf.
double linear_predictor(const Eigen::VectorXd& theta, int n, Cell cell);

struct CsvOptions {
  /// Input rows are cumulative amounts; they are differenced on ingestion.
  bool cumulative = false;
};

/// Parses a headerless numeric triangle: row i carries n - i + 1 fields.
/// Blank lines and empty trailing fields are ignored. Throws ParseError.
Triangle parse_csv(std::istream& in, const CsvOptions& options = {});
Triangle parse_csv_string(const std::string& text, const CsvOptions& options = {});
Triangle read_triangle(const std::string& path, const CsvOptions& options = {});

/// Serializes in the parse_csv format at round-trip double precision.
std::string to_csv(const Triangle& triangle);
std::string to_csv(const FullSquare& square);

/// Parses a full n x n square (n rows of n fields).
FullSquare parse_square_csv(std::istream& in);

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

/// Cumulative amounts C(i, j) = sum_{k <= j} Y(i, k) on the same cells.
Triangle cumulate(const Triangle& triangle);

/// Inverse of cumulate. Throws ParseError if an increment is negative.
Triangle decumulate(const Triangle& cumulative);

/// Total reserve: the sum of the lower-triangle cells of a full square.
double true_reserve(const FullSquare& square);

}  // namespace chainladder
