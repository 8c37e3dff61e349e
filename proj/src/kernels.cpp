#include "ubmaud/kernels.hpp"

#include "ubmaud/error.hpp"

#include <omp.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>

namespace ubmaud {

namespace {

std::atomic<int> g_threads{0};

constexpr Eigen::Index kRowChunk = 256;
constexpr Eigen::Index kColPanel = 64;

Eigen::Index n_chunks(Eigen::Index total, Eigen::Index chunk) { return (total + chunk - 1) / chunk; }

void check_residuals(const Eigen::MatrixXd& residuals, const PartitionVector& part) {
    if (residuals.cols() != part.R()) {
        throw DimensionMismatch("residual matrix has " + std::to_string(residuals.cols()) +
                                " columns, partition sums to " + std::to_string(part.R()));
    }
    if (residuals.rows() < 1) throw DimensionMismatch("residual matrix has no rows");
}

} // namespace

void set_num_threads(int n) { g_threads.store(n > 0 ? n : 0); }

int num_threads() {
    const int n = g_threads.load();
    return n > 0 ? n : omp_get_max_threads();
}

void configure_threads_from_env() {
    const char* v = std::getenv("UBMAUD_THREADS");
    if (v == nullptr || *v == '\0') return;
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (end == v || *end != '\0' || n < 1) return;
    set_num_threads(static_cast<int>(n));
}

namespace kernels {

BlockSummaries block_summaries_serial(const Eigen::MatrixXd& residuals, const PartitionVector& part) {
    check_residuals(residuals, part);
    const int G = part.G();
    const long n = residuals.rows();
    Eigen::VectorXd traces = Eigen::VectorXd::Zero(G);
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(G, G);
    Eigen::VectorXd w(G);
    for (long i = 0; i < n; ++i) {
        for (int g = 0; g < G; ++g) {
            double s = 0.0;
            for (int c = part.offset(g); c < part.offset(g) + part.size(g); ++c) {
                const double e = residuals(i, c);
                s += e;
                traces(g) += e * e;
            }
            w(g) = s;
        }
        for (int g = 0; g < G; ++g)
            for (int h = 0; h < G; ++h) sums(g, h) += w(g) * w(h);
    }
    traces /= static_cast<double>(n);
    sums /= static_cast<double>(n);
    return {traces, sums, n, part};
}

BlockSummaries block_summaries_parallel(const Eigen::MatrixXd& residuals, const PartitionVector& part) {
    check_residuals(residuals, part);
    const int G = part.G();
    const int R = part.R();
    const Eigen::Index n = residuals.rows();
    const int nt = num_threads();

    Eigen::VectorXd colsq(R);
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, G);
    const Eigen::Index row_chunks = n_chunks(n, kRowChunk);
    const Eigen::Index tasks = static_cast<Eigen::Index>(G) * row_chunks;

#pragma omp parallel num_threads(nt)
    {
#pragma omp for schedule(static)
        for (int c = 0; c < R; ++c) colsq(c) = residuals.col(c).squaredNorm();

        // row block sums; each (block, row chunk) task adds its columns in order
#pragma omp for schedule(static)
        for (Eigen::Index t = 0; t < tasks; ++t) {
            const int g = static_cast<int>(t / row_chunks);
            const Eigen::Index r0 = (t % row_chunks) * kRowChunk;
            const Eigen::Index len = std::min(kRowChunk, n - r0);
            auto dst = w.col(g).segment(r0, len);
            for (int c = part.offset(g); c < part.offset(g) + part.size(g); ++c)
                dst += residuals.col(c).segment(r0, len);
        }
    }

    Eigen::VectorXd traces(G);
    for (int g = 0; g < G; ++g) traces(g) = colsq.segment(part.offset(g), part.size(g)).sum();

    Eigen::MatrixXd sums(G, G);
    const int n_pairs = G * (G + 1) / 2;
#pragma omp parallel for schedule(static) num_threads(nt)
    for (int j = 0; j < n_pairs; ++j) {
        int g = 0;
        int rest = j;
        while (rest >= G - g) {
            rest -= G - g;
            ++g;
        }
        const int h = g + rest;
        sums(g, h) = w.col(g).dot(w.col(h));
    }
    for (int g = 0; g < G; ++g)
        for (int h = 0; h < g; ++h) sums(g, h) = sums(h, g);

    const double inv_n = 1.0 / static_cast<double>(n);
    return {traces * inv_n, sums * inv_n, static_cast<long>(n), part};
}

Eigen::MatrixXd fisher_matrix_serial(const std::vector<UbProduct>& p, double scale) {
    const int m = static_cast<int>(p.size());
    Eigen::MatrixXd f(m, m);
    for (int j = 0; j < m; ++j)
        for (int k = j; k < m; ++k) f(j, k) = f(k, j) = scale * ub_trace_ub_product(p[j], p[k]);
    return f;
}

Eigen::MatrixXd fisher_matrix_parallel(const std::vector<UbProduct>& p, double scale) {
    const int m = static_cast<int>(p.size());
    Eigen::MatrixXd f(m, m);
#pragma omp parallel for schedule(dynamic) num_threads(num_threads())
    for (int j = 0; j < m; ++j)
        for (int k = j; k < m; ++k) f(j, k) = scale * ub_trace_ub_product(p[j], p[k]);
    for (int j = 0; j < m; ++j)
        for (int k = 0; k < j; ++k) f(j, k) = f(k, j);
    return f;
}

Eigen::MatrixXd ub_apply_rows_serial(const UniformBlockMatrix& m, const Eigen::MatrixXd& noise) {
    if (noise.cols() != m.R()) throw DimensionMismatch("ub_apply_rows: column count differs from R");
    Eigen::MatrixXd out(noise.rows(), noise.cols());
    for (Eigen::Index i = 0; i < noise.rows(); ++i) out.row(i) = ub_apply(m, noise.row(i).transpose()).transpose();
    return out;
}

Eigen::MatrixXd ub_apply_rows_parallel(const UniformBlockMatrix& m, const Eigen::MatrixXd& noise) {
    if (noise.cols() != m.R()) throw DimensionMismatch("ub_apply_rows: column count differs from R");
    const PartitionVector& part = m.part();
    const int G = part.G();
    const Eigen::Index n = noise.rows();
    Eigen::MatrixXd out(n, noise.cols());
    const Eigen::Index chunks = n_chunks(n, kRowChunk);

#pragma omp parallel for schedule(static) num_threads(num_threads())
    for (Eigen::Index t = 0; t < chunks; ++t) {
        const Eigen::Index r0 = t * kRowChunk;
        const Eigen::Index len = std::min(kRowChunk, n - r0);
        Eigen::MatrixXd w = Eigen::MatrixXd::Zero(len, G);
        for (int g = 0; g < G; ++g)
            for (int c = part.offset(g); c < part.offset(g) + part.size(g); ++c)
                w.col(g) += noise.col(c).segment(r0, len);
        // shift(i, g) = sum_h b_gh w(i, h)
        Eigen::MatrixXd shift = Eigen::MatrixXd::Zero(len, G);
        for (int g = 0; g < G; ++g)
            for (int h = 0; h < G; ++h) shift.col(g) += m.B()(g, h) * w.col(h);
        for (int g = 0; g < G; ++g)
            for (int c = part.offset(g); c < part.offset(g) + part.size(g); ++c)
                out.col(c).segment(r0, len) = m.A()(g) * noise.col(c).segment(r0, len) + shift.col(g);
    }
    return out;
}

OlsPieces ols_serial(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const XtxFactor& xtx) {
    if (x.rows() != y.rows()) throw DimensionMismatch("X and Y have different row counts");
    Eigen::MatrixXd coef = xtx.solve(x.transpose() * y);
    Eigen::MatrixXd res = y - x * coef;
    return {std::move(coef), std::move(res)};
}

OlsPieces ols_parallel(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, const XtxFactor& xtx) {
    if (x.rows() != y.rows()) throw DimensionMismatch("X and Y have different row counts");
    const Eigen::Index R = y.cols();
    Eigen::MatrixXd coef(x.cols(), R);
    Eigen::MatrixXd res(y.rows(), R);
    const Eigen::Index panels = n_chunks(R, kColPanel);
#pragma omp parallel for schedule(static) num_threads(num_threads())
    for (Eigen::Index t = 0; t < panels; ++t) {
        const Eigen::Index c0 = t * kColPanel;
        const Eigen::Index len = std::min(kColPanel, R - c0);
        const Eigen::MatrixXd cp = xtx.solve(x.transpose() * y.middleCols(c0, len));
        coef.middleCols(c0, len) = cp;
        res.middleCols(c0, len) = y.middleCols(c0, len) - x * cp;
    }
    return {std::move(coef), std::move(res)};
}

} // namespace kernels
} // namespace ubmaud
