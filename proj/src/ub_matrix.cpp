#include "ubmaud/ub_matrix.hpp"

#include "ubmaud/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

namespace ubmaud {

namespace {

constexpr double kSingularRatio = 1e-12;
constexpr double kMaxCondition = 1e12;

void require_same_partition(const PartitionVector& x, const PartitionVector& y, const char* op) {
    if (!(x == y)) throw PartitionMismatch(std::string(op) + ": operands use different partitions");
}

double max_abs(const Eigen::MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

// Mean of a set of values, returned bit-exactly when all values coincide.
class BlockMean {
public:
    void add(double v) {
        if (count_ == 0) first_ = v;
        else if (v != first_) uniform_ = false;
        sum_ += v;
        ++count_;
    }
    double value() const { return uniform_ ? first_ : sum_ / static_cast<double>(count_); }

private:
    double first_ = 0.0;
    double sum_ = 0.0;
    long count_ = 0;
    bool uniform_ = true;
};

Eigen::VectorXd sqrt_sizes(const PartitionVector& part) { return part.L().cwiseSqrt(); }

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& b) { return 0.5 * (b + b.transpose()); }

} // namespace

Eigen::MatrixXd UbProduct::delta() const {
    return Eigen::MatrixXd(A.asDiagonal()) + B * part.L().asDiagonal();
}

UniformBlockMatrix::UniformBlockMatrix(Eigen::VectorXd A, Eigen::MatrixXd B, PartitionVector part)
    : a_(std::move(A)), b_(std::move(B)), part_(std::move(part)) {
    const int g = part_.G();
    if (a_.size() != g || b_.rows() != g || b_.cols() != g) {
        std::ostringstream os;
        os << "expected A of length " << g << " and B of size " << g << "x" << g << ", got "
           << a_.size() << " and " << b_.rows() << "x" << b_.cols();
        throw DimensionMismatch(os.str());
    }
    const double asym = max_abs(b_ - b_.transpose());
    if (asym > 1e-8 * max_abs(b_)) {
        std::ostringstream os;
        os << "B is not symmetric (max |b_gh - b_hg| = " << asym << ")";
        throw StructureViolation(os.str());
    }
    b_ = symmetrized(b_);
}

UniformBlockMatrix UniformBlockMatrix::identity(const PartitionVector& part) {
    return {Eigen::VectorXd::Ones(part.G()), Eigen::MatrixXd::Zero(part.G(), part.G()), part};
}

UniformBlockMatrix UniformBlockMatrix::zero(const PartitionVector& part) {
    return {Eigen::VectorXd::Zero(part.G()), Eigen::MatrixXd::Zero(part.G(), part.G()), part};
}

Eigen::MatrixXd UniformBlockMatrix::delta() const { return general().delta(); }

Eigen::MatrixXd UniformBlockMatrix::symmetric_delta() const {
    const Eigen::VectorXd s = sqrt_sizes(part_);
    Eigen::MatrixXd out = s.asDiagonal() * b_ * s.asDiagonal();
    out.diagonal() += a_;
    return symmetrized(out);
}

double UniformBlockMatrix::operator()(int r, int c) const {
    const int g = part_.community_of(r);
    const int h = part_.community_of(c);
    return r == c ? a_(g) + b_(g, h) : b_(g, h);
}

UniformBlockMatrix UniformBlockMatrix::operator-() const { return {-a_, -b_, part_}; }

UniformBlockMatrix UniformBlockMatrix::scaled(double c) const { return {c * a_, c * b_, part_}; }

Eigen::MatrixXd expand_dense(const UbProduct& m) {
    const PartitionVector& p = m.part;
    Eigen::MatrixXd out(p.R(), p.R());
    for (int g = 0; g < p.G(); ++g)
        for (int h = 0; h < p.G(); ++h)
            out.block(p.offset(g), p.offset(h), p.size(g), p.size(h)).setConstant(m.B(g, h));
    for (int g = 0; g < p.G(); ++g)
        for (int k = 0; k < p.size(g); ++k) out(p.offset(g) + k, p.offset(g) + k) += m.A(g);
    return out;
}

Eigen::MatrixXd expand_dense(const UniformBlockMatrix& m) { return expand_dense(m.general()); }

UniformBlockMatrix extract_ub(const Eigen::MatrixXd& dense, const PartitionVector& part, double tol) {
    const int R = part.R();
    const int G = part.G();
    if (dense.rows() != R || dense.cols() != R) {
        throw DimensionMismatch("extract_ub: matrix is " + std::to_string(dense.rows()) + "x" +
                                std::to_string(dense.cols()) + ", partition implies R = " +
                                std::to_string(R));
    }
    Eigen::VectorXd a(G);
    Eigen::MatrixXd b(G, G);
    Eigen::VectorXd diag_value(G);

    for (int g = 0; g < G; ++g) {
        for (int h = g; h < G; ++h) {
            BlockMean off;
            BlockMean on;
            for (int i = 0; i < part.size(g); ++i) {
                for (int j = 0; j < part.size(h); ++j) {
                    const int r = part.offset(g) + i;
                    const int c = part.offset(h) + j;
                    if (r == c) {
                        on.add(dense(r, c));
                    } else {
                        off.add(dense(r, c));
                        off.add(dense(c, r));
                    }
                }
            }
            b(g, h) = b(h, g) = off.value();
            if (g == h) diag_value(g) = on.value();
        }
        a(g) = diag_value(g) - b(g, g);
    }

    for (int r = 0; r < R; ++r) {
        const int g = part.community_of(r);
        for (int c = 0; c < R; ++c) {
            const int h = part.community_of(c);
            const double expected = r == c ? diag_value(g) : b(g, h);
            const double dev = std::abs(dense(r, c) - expected);
            if (!(dev <= tol)) {
                std::ostringstream os;
                os << "entry (" << r << "," << c << ") deviates from the block pattern by " << dev
                   << " (tol " << tol << ")";
                throw StructureViolation(os.str());
            }
        }
    }
    return {a, b, part};
}

UniformBlockMatrix ub_add(const UniformBlockMatrix& x, const UniformBlockMatrix& y) {
    require_same_partition(x.part(), y.part(), "ub_add");
    return {x.A() + y.A(), x.B() + y.B(), x.part()};
}

UniformBlockMatrix ub_sub(const UniformBlockMatrix& x, const UniformBlockMatrix& y) {
    require_same_partition(x.part(), y.part(), "ub_sub");
    return {x.A() - y.A(), x.B() - y.B(), x.part()};
}

UbProduct ub_mul(const UbProduct& x, const UbProduct& y) {
    require_same_partition(x.part, y.part, "ub_mul");
    const Eigen::VectorXd l = x.part.L();
    Eigen::MatrixXd b = x.A.asDiagonal() * y.B;
    b += x.B * y.A.asDiagonal();
    b += x.B * l.asDiagonal() * y.B;
    return {x.A.cwiseProduct(y.A), std::move(b), x.part};
}

UniformBlockMatrix to_symmetric(const UbProduct& m, double tol) {
    const double asym = max_abs(m.B - m.B.transpose());
    if (asym > tol * std::max(max_abs(m.B), std::numeric_limits<double>::min())) {
        std::ostringstream os;
        os << "product is not symmetric (max asymmetry " << asym << ")";
        throw StructureViolation(os.str());
    }
    return {m.A, symmetrized(m.B), m.part};
}

Eigen::VectorXd ub_eigenvalues(const UniformBlockMatrix& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.symmetric_delta(), Eigen::EigenvaluesOnly);
    Eigen::VectorXd out(m.R());
    int k = 0;
    for (int g = 0; g < m.G(); ++g)
        for (int i = 0; i < m.part().size(g) - 1; ++i) out(k++) = m.A()(g);
    for (int g = 0; g < m.G(); ++g) out(k++) = es.eigenvalues()(g);
    std::sort(out.data(), out.data() + out.size());
    return out;
}

double ub_det(const UniformBlockMatrix& m) {
    double prod = 1.0;
    for (int g = 0; g < m.G(); ++g) prod *= std::pow(m.A()(g), m.part().size(g) - 1);
    return prod * m.delta().partialPivLu().determinant();
}

bool is_ub_positive_definite(const UniformBlockMatrix& m) {
    const double amax = m.A().cwiseAbs().maxCoeff();
    if (!(m.A().minCoeff() > kSingularRatio * amax)) return false;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.symmetric_delta(), Eigen::EigenvaluesOnly);
    const Eigen::VectorXd& mu = es.eigenvalues();
    return mu.allFinite() && mu(0) > 0.0 && mu(0) >= mu(mu.size() - 1) / kMaxCondition;
}

void require_ub_positive_definite(const UniformBlockMatrix& m, const char* what) {
    const double amax = m.A().cwiseAbs().maxCoeff();
    for (int g = 0; g < m.G(); ++g) {
        if (!(m.A()(g) > kSingularRatio * amax)) {
            std::ostringstream os;
            os << what << ": a_" << g + 1 << g + 1 << " = " << m.A()(g) << " is not positive";
            throw NotPositiveDefinite(os.str());
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.symmetric_delta(), Eigen::EigenvaluesOnly);
    const Eigen::VectorXd& mu = es.eigenvalues();
    if (!mu.allFinite() || !(mu(0) > 0.0) || mu(0) < mu(mu.size() - 1) / kMaxCondition) {
        std::ostringstream os;
        os << what << ": smallest eigenvalue of Delta = " << mu(0) << " (largest " << mu(mu.size() - 1)
           << ") violates positive definiteness";
        throw NotPositiveDefinite(os.str());
    }
}

double ub_log_det(const UniformBlockMatrix& m) {
    require_ub_positive_definite(m, "ub_log_det");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.symmetric_delta(), Eigen::EigenvaluesOnly);
    double out = es.eigenvalues().array().log().sum();
    for (int g = 0; g < m.G(); ++g) out += (m.part().size(g) - 1) * std::log(m.A()(g));
    return out;
}

double delta_condition(const Eigen::MatrixXd& delta) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(delta);
    const Eigen::VectorXd& s = svd.singularValues();
    const double smin = s(s.size() - 1);
    if (!(smin > 0.0)) return std::numeric_limits<double>::infinity();
    return s(0) / smin;
}

UniformBlockMatrix ub_inverse(const UniformBlockMatrix& m) {
    const double amax = m.A().cwiseAbs().maxCoeff();
    const double amin = m.A().cwiseAbs().minCoeff();
    if (!(amax > 0.0) || amin < kSingularRatio * amax) {
        std::ostringstream os;
        os << "ub_inverse: min |a_gg| = " << amin << " against max " << amax;
        throw Singular(os.str());
    }
    const Eigen::MatrixXd d = m.delta();
    const double cond = delta_condition(d);
    if (!(cond <= kMaxCondition)) {
        std::ostringstream os;
        os << "ub_inverse: condition estimate of Delta is " << cond;
        throw Singular(os.str());
    }
    const Eigen::VectorXd ainv = m.A().cwiseInverse();
    const Eigen::MatrixXd rhs = m.B() * ainv.asDiagonal();
    Eigen::MatrixXd binv = -d.partialPivLu().solve(rhs);
    return {ainv, symmetrized(binv), m.part()};
}

UniformBlockMatrix ub_sqrt_branch(const UniformBlockMatrix& m, unsigned branch) {
    require_ub_positive_definite(m, "ub_sqrt");
    const int G = m.G();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.symmetric_delta());
    Eigen::VectorXd root_mu = es.eigenvalues().cwiseSqrt();
    for (int k = 0; k < G; ++k)
        if (branch & (1u << k)) root_mu(k) = -root_mu(k);
    const Eigen::MatrixXd& q = es.eigenvectors();
    const Eigen::MatrixXd root = symmetrized(q * root_mu.asDiagonal() * q.transpose());

    const Eigen::VectorXd a_root = m.A().cwiseSqrt();
    const Eigen::VectorXd inv_sqrt_l = sqrt_sizes(m.part()).cwiseInverse();
    Eigen::MatrixXd b_root = inv_sqrt_l.asDiagonal() * root * inv_sqrt_l.asDiagonal();
    const Eigen::VectorXd l = m.part().L();
    for (int g = 0; g < G; ++g) b_root(g, g) -= a_root(g) / l(g);
    return {a_root, symmetrized(b_root), m.part()};
}

UniformBlockMatrix ub_sqrt(const UniformBlockMatrix& m) { return ub_sqrt_branch(m, 0u); }

double ub_trace_product(const Eigen::MatrixXd& m, const UniformBlockMatrix& n) {
    const PartitionVector& p = n.part();
    if (m.rows() != p.R() || m.cols() != p.R())
        throw PartitionMismatch("ub_trace_product: dense operand does not match the partition");
    double out = 0.0;
    for (int g = 0; g < p.G(); ++g) {
        for (int h = 0; h < p.G(); ++h) {
            const auto blk = m.block(p.offset(g), p.offset(h), p.size(g), p.size(h));
            out += n.B()(g, h) * blk.sum();
            if (g == h) out += n.A()(g) * blk.trace();
        }
    }
    return out;
}

double ub_trace_ub_product(const UbProduct& m, const UbProduct& n) {
    require_same_partition(m.part, n.part, "ub_trace_ub_product");
    const Eigen::VectorXd l = m.part.L();
    double out = 0.0;
    for (int g = 0; g < l.size(); ++g) {
        out += l(g) * (m.A(g) * n.A(g) + m.A(g) * n.B(g, g) + m.B(g, g) * n.A(g));
    }
    for (int g = 0; g < l.size(); ++g)
        for (int h = 0; h < l.size(); ++h) out += m.B(g, h) * n.B(h, g) * l(g) * l(h);
    return out;
}

double ub_trace_ub_product(const UniformBlockMatrix& m, const UniformBlockMatrix& n) {
    return ub_trace_ub_product(m.general(), n.general());
}

Eigen::VectorXd ub_apply(const UniformBlockMatrix& m, const Eigen::Ref<const Eigen::VectorXd>& x) {
    const PartitionVector& p = m.part();
    if (x.size() != p.R()) throw DimensionMismatch("ub_apply: vector length does not match R");
    Eigen::VectorXd block_sums(p.G());
    for (int g = 0; g < p.G(); ++g) block_sums(g) = x.segment(p.offset(g), p.size(g)).sum();
    const Eigen::VectorXd t = m.B() * block_sums;
    Eigen::VectorXd y(p.R());
    for (int g = 0; g < p.G(); ++g)
        y.segment(p.offset(g), p.size(g)) =
            (m.A()(g) * x.segment(p.offset(g), p.size(g))).array() + t(g);
    return y;
}

double ub_frobenius_norm(const UniformBlockMatrix& m) {
    const Eigen::VectorXd l = m.part().L();
    double ss = 0.0;
    for (int g = 0; g < m.G(); ++g) {
        const double d = m.A()(g) + m.B()(g, g);
        ss += l(g) * d * d + l(g) * (l(g) - 1.0) * m.B()(g, g) * m.B()(g, g);
        for (int h = 0; h < m.G(); ++h)
            if (h != g) ss += l(g) * l(h) * m.B()(g, h) * m.B()(g, h);
    }
    return std::sqrt(ss);
}

double ub_spectral_norm(const UniformBlockMatrix& m) {
    return ub_eigenvalues(m).cwiseAbs().maxCoeff();
}

} // namespace ubmaud
