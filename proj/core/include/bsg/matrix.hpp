#pragma once

#include <Eigen/Dense>

#include <string>

namespace bsg {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Dense matrix file: an ASCII line `rows cols`, then rows*cols little-endian
/// float32 values in row-major order. Files ending in `.csv` are read as
/// comma-separated text instead, one row per line.
Matrix read_matrix(const std::string& path);
void write_matrix(const Matrix& m, const std::string& path);

bool all_finite(const Matrix& m);

}  // namespace bsg
