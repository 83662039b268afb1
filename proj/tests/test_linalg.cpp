#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>

#include "kyle/linalg.hpp"
#include "kyle/model.hpp"

using namespace kyle;

namespace {

using cd = std::complex<double>;

// Sorts by (re, im) so two spectra can be compared elementwise.
std::vector<cd> sorted(std::vector<cd> v) {
    std::sort(v.begin(), v.end(), [](cd a, cd b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    return v;
}

Matrix random_matrix(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> z;
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m(i, j) = z(rng);
    return m;
}

}  // namespace

TEST_CASE("matrix basics") {
    const Matrix a{{1, 2}, {3, 4}};
    const Matrix id = Matrix::identity(2);
    CHECK(a * id == a);
    CHECK(a.inf_norm() == 7.0);
    const auto y = a * std::vector<double>{1, 1};
    CHECK(y == std::vector<double>{3, 7});
    const Matrix inv = inverse(a);
    const Matrix prod = a * inv;
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) CHECK(prod(i, j) == doctest::Approx(i == j ? 1.0 : 0.0));
    CHECK_THROWS_AS(inverse(Matrix{{1, 2}, {2, 4}}), std::domain_error);
}

TEST_CASE("eigenvalues of diagonal and triangular matrices") {
    const auto e = eigenvalues(Matrix{{3, 1, 0}, {0, -5, 2}, {0, 0, 0.5}});
    REQUIRE(e.size() == 3);
    CHECK(e[0].real() == doctest::Approx(-5.0));
    CHECK(e[1].real() == doctest::Approx(3.0));
    CHECK(e[2].real() == doctest::Approx(0.5));
    CHECK(spectral_radius(e) == doctest::Approx(5.0));
    CHECK(eigenvalues(Matrix::identity(4))[3] == cd(1.0, 0.0));
}

TEST_CASE("complex conjugate pairs") {
    // Rotation by theta scaled by r: eigenvalues r e^{+-i theta}.
    const double r = 1.5, th = 0.7;
    const Matrix m{{r * std::cos(th), -r * std::sin(th)}, {r * std::sin(th), r * std::cos(th)}};
    const auto e = sorted(eigenvalues(m));
    CHECK(e[0].real() == doctest::Approx(r * std::cos(th)).epsilon(1e-12));
    CHECK(e[0].imag() == doctest::Approx(-r * std::sin(th)).epsilon(1e-12));
    CHECK(e[1].imag() == doctest::Approx(r * std::sin(th)).epsilon(1e-12));
}

TEST_CASE("similarity transforms preserve a prescribed spectrum") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    for (std::size_t n = 1; n <= 10; ++n) {
        for (int t = 0; t < 10; ++t) {
            // Block diagonal D with real eigenvalues and 2x2 rotation blocks.
            Matrix d(n, n);
            std::vector<cd> expected;
            std::size_t i = 0;
            while (i < n) {
                if (i + 1 < n && t % 2 == 1) {
                    const double a = u(rng), b = std::abs(u(rng)) + 0.1;
                    d(i, i) = a; d(i, i + 1) = -b; d(i + 1, i) = b; d(i + 1, i + 1) = a;
                    expected.emplace_back(a, b);
                    expected.emplace_back(a, -b);
                    i += 2;
                } else {
                    d(i, i) = u(rng);
                    expected.emplace_back(d(i, i), 0.0);
                    i += 1;
                }
            }
            const Matrix p = random_matrix(rng, n);
            Matrix pinv;
            try {
                pinv = inverse(p);
            } catch (const std::domain_error&) {
                continue;
            }
            const Matrix a = p * d * pinv;
            const auto got = sorted(eigenvalues(a));
            const auto want = sorted(expected);
            for (std::size_t k = 0; k < n; ++k) CHECK(std::abs(got[k] - want[k]) < 1e-9 * (1 + std::abs(want[k])));
            const auto desc = eigenvalues(a);
            for (std::size_t k = 1; k < n; ++k) CHECK(std::abs(desc[k - 1]) >= std::abs(desc[k]) - 1e-12);
        }
    }
}

TEST_CASE("eigenvalue input validation") {
    CHECK_THROWS_AS(eigenvalues(Matrix(2, 3)), InputError);
    CHECK_THROWS_AS(eigenvalues(Matrix()), InputError);
    CHECK_THROWS_AS(eigenvalues(Matrix{{1, NAN}, {0, 1}}), InputError);
}
