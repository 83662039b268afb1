#include "kyle/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "kyle/model.hpp"

namespace kyle {

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw InputError("ragged matrix initializer");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

std::vector<double> Matrix::row(std::size_t r) const {
    return {data_.begin() + static_cast<std::ptrdiff_t>(r * cols_),
            data_.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols_)};
}

double Matrix::inf_norm() const {
    double best = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < cols_; ++j) sum += std::abs((*this)(i, j));
        best = std::max(best, sum);
    }
    return best;
}

bool Matrix::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw InputError("matrix product dimension mismatch");
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

std::vector<double> operator*(const Matrix& a, const std::vector<double>& x) {
    if (a.cols() != x.size()) throw InputError("matrix-vector dimension mismatch");
    std::vector<double> y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) y[i] += a(i, j) * x[j];
    return y;
}

Matrix inverse(const Matrix& a) {
    if (a.rows() != a.cols()) throw InputError("inverse of non-square matrix");
    const std::size_t n = a.rows();
    Matrix w = a;
    Matrix inv = Matrix::identity(n);
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(w(r, col)) > std::abs(w(piv, col))) piv = r;
        if (w(piv, col) == 0.0) throw std::domain_error("singular matrix");
        if (piv != col)
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(w(piv, j), w(col, j));
                std::swap(inv(piv, j), inv(col, j));
            }
        const double d = w(col, col);
        for (std::size_t j = 0; j < n; ++j) {
            w(col, j) /= d;
            inv(col, j) /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = w(r, col);
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) {
                w(r, j) -= f * w(col, j);
                inv(r, j) -= f * inv(col, j);
            }
        }
    }
    return inv;
}

namespace {

void balance(Matrix& a) {
    constexpr double radix = std::numeric_limits<double>::radix;
    constexpr double sqrdx = radix * radix;
    const std::size_t n = a.rows();
    bool done = false;
    while (!done) {
        done = true;
        for (std::size_t i = 0; i < n; ++i) {
            double r = 0.0;
            double c = 0.0;
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) {
                    c += std::abs(a(j, i));
                    r += std::abs(a(i, j));
                }
            if (c == 0.0 || r == 0.0) continue;
            double g = r / radix;
            double f = 1.0;
            const double s = c + r;
            while (c < g) {
                f *= radix;
                c *= sqrdx;
            }
            g = r * radix;
            while (c > g) {
                f /= radix;
                c /= sqrdx;
            }
            if ((c + r) / f < 0.95 * s) {
                done = false;
                g = 1.0 / f;
                for (std::size_t j = 0; j < n; ++j) a(i, j) *= g;
                for (std::size_t j = 0; j < n; ++j) a(j, i) *= f;
            }
        }
    }
}

// Reduction to upper Hessenberg form by Gaussian elimination with pivoting.
void to_hessenberg(Matrix& a) {
    const std::size_t n = a.rows();
    for (std::size_t m = 1; m + 1 < n; ++m) {
        double x = 0.0;
        std::size_t piv = m;
        for (std::size_t j = m; j < n; ++j)
            if (std::abs(a(j, m - 1)) > std::abs(x)) {
                x = a(j, m - 1);
                piv = j;
            }
        if (piv != m) {
            for (std::size_t j = m - 1; j < n; ++j) std::swap(a(piv, j), a(m, j));
            for (std::size_t j = 0; j < n; ++j) std::swap(a(j, piv), a(j, m));
        }
        if (x == 0.0) continue;
        for (std::size_t i = m + 1; i < n; ++i) {
            double y = a(i, m - 1);
            if (y == 0.0) continue;
            y /= x;
            a(i, m - 1) = y;
            for (std::size_t j = m; j < n; ++j) a(i, j) -= y * a(m, j);
            for (std::size_t j = 0; j < n; ++j) a(j, m) += y * a(j, i);
        }
    }
    for (std::size_t i = 2; i < n; ++i)
        for (std::size_t j = 0; j + 1 < i; ++j) a(i, j) = 0.0;
}

double sign_of(double magnitude, double sign) {
    return sign >= 0.0 ? std::abs(magnitude) : -std::abs(magnitude);
}

// Francis double-shift QR on an upper Hessenberg matrix; eigenvalues only.
std::vector<std::complex<double>> hessenberg_qr(Matrix& a) {
    constexpr double eps = std::numeric_limits<double>::epsilon();
    const int n = static_cast<int>(a.rows());
    std::vector<std::complex<double>> w(static_cast<std::size_t>(n));
    auto A = [&a](int i, int j) -> double& {
        return a(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    };

    double anorm = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = std::max(i - 1, 0); j < n; ++j) anorm += std::abs(A(i, j));

    int nn = n - 1;
    double t = 0.0;
    while (nn >= 0) {
        int its = 0;
        int l = 0;
        do {
            for (l = nn; l > 0; --l) {
                double s = std::abs(A(l - 1, l - 1)) + std::abs(A(l, l));
                if (s == 0.0) s = anorm;
                if (std::abs(A(l, l - 1)) <= eps * s) {
                    A(l, l - 1) = 0.0;
                    break;
                }
            }
            double x = A(nn, nn);
            if (l == nn) {
                w[static_cast<std::size_t>(nn--)] = x + t;
            } else {
                double y = A(nn - 1, nn - 1);
                double ww = A(nn, nn - 1) * A(nn - 1, nn);
                if (l == nn - 1) {
                    const double p = 0.5 * (y - x);
                    const double q = p * p + ww;
                    double z = std::sqrt(std::abs(q));
                    x += t;
                    if (q >= 0.0) {
                        z = p + sign_of(z, p);
                        w[static_cast<std::size_t>(nn - 1)] = w[static_cast<std::size_t>(nn)] = x + z;
                        if (z != 0.0) w[static_cast<std::size_t>(nn)] = x - ww / z;
                    } else {
                        w[static_cast<std::size_t>(nn)] = {x + p, -z};
                        w[static_cast<std::size_t>(nn - 1)] = std::conj(w[static_cast<std::size_t>(nn)]);
                    }
                    nn -= 2;
                } else {
                    if (its == 60) throw std::runtime_error("eigenvalues: QR iteration did not converge");
                    if (its == 10 || its == 20 || its == 40) {
                        // exceptional shift
                        t += x;
                        for (int i = 0; i <= nn; ++i) A(i, i) -= x;
                        const double s = std::abs(A(nn, nn - 1)) + std::abs(A(nn - 1, nn - 2));
                        y = x = 0.75 * s;
                        ww = -0.4375 * s * s;
                    }
                    ++its;
                    int m = nn - 2;
                    double p = 0.0, q = 0.0, r = 0.0, z = 0.0;
                    for (; m >= l; --m) {
                        z = A(m, m);
                        r = x - z;
                        double s = y - z;
                        p = (r * s - ww) / A(m + 1, m) + A(m, m + 1);
                        q = A(m + 1, m + 1) - z - r - s;
                        r = A(m + 2, m + 1);
                        s = std::abs(p) + std::abs(q) + std::abs(r);
                        p /= s;
                        q /= s;
                        r /= s;
                        if (m == l) break;
                        const double u = std::abs(A(m, m - 1)) * (std::abs(q) + std::abs(r));
                        const double v = std::abs(p) * (std::abs(A(m - 1, m - 1)) + std::abs(z) +
                                                        std::abs(A(m + 1, m + 1)));
                        if (u <= eps * v) break;
                    }
                    for (int i = m; i < nn - 1; ++i) {
                        A(i + 2, i) = 0.0;
                        if (i != m) A(i + 2, i - 1) = 0.0;
                    }
                    for (int k = m; k < nn; ++k) {
                        if (k != m) {
                            p = A(k, k - 1);
                            q = A(k + 1, k - 1);
                            r = 0.0;
                            if (k + 1 != nn) r = A(k + 2, k - 1);
                            x = std::abs(p) + std::abs(q) + std::abs(r);
                            if (x != 0.0) {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        const double s = sign_of(std::sqrt(p * p + q * q + r * r), p);
                        if (s == 0.0) continue;
                        if (k == m) {
                            if (l != m) A(k, k - 1) = -A(k, k - 1);
                        } else {
                            A(k, k - 1) = -s * x;
                        }
                        p += s;
                        x = p / s;
                        y = q / s;
                        z = r / s;
                        q /= p;
                        r /= p;
                        for (int j = k; j <= nn; ++j) {
                            p = A(k, j) + q * A(k + 1, j);
                            if (k + 1 != nn) {
                                p += r * A(k + 2, j);
                                A(k + 2, j) -= p * z;
                            }
                            A(k + 1, j) -= p * y;
                            A(k, j) -= p * x;
                        }
                        const int mmin = nn < k + 3 ? nn : k + 3;
                        for (int i = l; i <= mmin; ++i) {
                            p = x * A(i, k) + y * A(i, k + 1);
                            if (k + 1 != nn) {
                                p += z * A(i, k + 2);
                                A(i, k + 2) -= p * r;
                            }
                            A(i, k + 1) -= p * q;
                            A(i, k) -= p;
                        }
                    }
                }
            }
        } while (l + 1 < nn);
    }
    return w;
}

}  // namespace

std::vector<std::complex<double>> eigenvalues(const Matrix& input) {
    if (input.rows() != input.cols()) throw InputError("eigenvalues: matrix is not square");
    if (input.rows() == 0) throw InputError("eigenvalues: empty matrix");
    if (input.rows() > 64) throw InputError("eigenvalues: matrix larger than 64x64");
    if (!input.all_finite()) throw InputError("eigenvalues: non-finite matrix entry");

    Matrix a = input;
    balance(a);
    to_hessenberg(a);
    std::vector<std::complex<double>> w = hessenberg_qr(a);
    std::sort(w.begin(), w.end(), [](const auto& lhs, const auto& rhs) {
        const double ml = std::abs(lhs);
        const double mr = std::abs(rhs);
        if (ml != mr) return ml > mr;
        if (lhs.real() != rhs.real()) return lhs.real() > rhs.real();
        return lhs.imag() > rhs.imag();
    });
    return w;
}

double spectral_radius(const std::vector<std::complex<double>>& eig) {
    double r = 0.0;
    for (const auto& z : eig) r = std::max(r, std::abs(z));
    return r;
}

}  // namespace kyle
