#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <vector>

namespace kyle {

/// Dense row-major matrix for the small systems used here (N up to a few
/// dozen).
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::vector<double> row(std::size_t r) const;
    const std::vector<double>& data() const { return data_; }

    /// Max absolute row sum.
    double inf_norm() const;
    bool all_finite() const;

    friend Matrix operator*(const Matrix& a, const Matrix& b);
    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

std::vector<double> operator*(const Matrix& a, const std::vector<double>& x);

/// Inverse by Gauss-Jordan elimination with partial pivoting. Throws
/// std::domain_error for singular input.
Matrix inverse(const Matrix& a);

/// All eigenvalues of a real square matrix, ordered by descending magnitude
/// (ties broken by descending real part, then imaginary part).
///
/// The matrix is balanced, reduced to upper Hessenberg form by stabilised
/// elimination and then deflated with Francis double-shift QR steps.
/// Throws InputError for non-square or non-finite input, or n > 64.
std::vector<std::complex<double>> eigenvalues(const Matrix& a);

double spectral_radius(const std::vector<std::complex<double>>& eig);

}  // namespace kyle
