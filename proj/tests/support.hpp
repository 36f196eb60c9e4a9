// Shared fixtures, random generators and independent oracles for the unit tests.
#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include <Eigen/Core>

#include "rmtwarn/core.hpp"
#include "rmtwarn/market_data.hpp"

namespace rmtwarn::testing {

// std::mt19937_64 is fully specified, so generated cases are stable across platforms.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : engine_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
    double normal() { return normal_(engine_); }
    std::size_t index(std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(engine_);
    }
    bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }

    Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols) {
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j) {
            for (Eigen::Index i = 0; i < rows; ++i) {
                m(i, j) = normal();
            }
        }
        return m;
    }

    std::vector<double> mass_vector(std::size_t n) {
        std::vector<double> v(n);
        double total = 0.0;
        for (auto& x : v) {
            x = coin(0.2) ? 0.0 : uniform(0.0, 1.0);
            total += x;
        }
        if (total == 0.0) {
            v[0] = total = 1.0;
        }
        for (auto& x : v) {
            x /= total;
        }
        return v;
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_;
};

inline std::vector<Date> weekdays(Date start, std::size_t count) {
    std::vector<Date> out;
    for (Date d = start; out.size() < count; d = d.plus_days(1)) {
        if (!d.is_weekend()) {
            out.push_back(d);
        }
    }
    return out;
}

inline std::vector<Date> consecutive_days(Date start, std::size_t count) {
    std::vector<Date> out;
    for (std::size_t k = 0; k < count; ++k) {
        out.push_back(start.plus_days(static_cast<int>(k)));
    }
    return out;
}

// Return panel built directly from a matrix of returns.
inline ReturnPanel make_returns(const Eigen::MatrixXd& r, Date start = Date(2001, 1, 1)) {
    ReturnPanel p;
    for (Eigen::Index i = 0; i < r.rows(); ++i) {
        p.tickers.push_back("T" + std::to_string(i));
    }
    p.dates = consecutive_days(start, static_cast<std::size_t>(r.cols()));
    p.returns = r;
    return p;
}

// Brute force over all ordered pairs x <= y in [t, t+H].
inline double brute_mdd(const std::vector<double>& p, std::size_t t, std::size_t h) {
    double worst = 0.0;
    for (std::size_t x = t; x <= t + h; ++x) {
        for (std::size_t y = x; y <= t + h; ++y) {
            worst = std::max(worst, 1.0 - p[y] / p[x]);
        }
    }
    return worst;
}

inline Eigen::MatrixXd equicorrelation(Eigen::Index n, double r) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(n, n, r);
    m.diagonal().setOnes();
    return m;
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("rmtwarn_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace rmtwarn::testing
