#include "muse/text/lsa.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "muse/common/error.hpp"

namespace muse::text {

LsaVectorizer LsaVectorizer::fit(const std::vector<std::string>& corpus, const LsaOptions& options) {
    LsaVectorizer v;
    v.options_ = options;
    std::vector<Tokens> docs;
    std::map<std::string, int> df;
    for (const auto& doc : corpus) {
        docs.push_back(tokenize(doc, options.tokenize));
        for (const auto& t : std::set<std::string>(docs.back().begin(), docs.back().end())) ++df[t];
    }
    if (df.empty()) throw Error(ErrorCode::EmptyVocabulary, "corpus has no tokens");
    v.idf_.resize(static_cast<Eigen::Index>(df.size()));
    const auto n = static_cast<double>(corpus.size());
    for (const auto& [term, count] : df) {
        const auto id = static_cast<Eigen::Index>(v.vocabulary_.size());
        v.vocabulary_.emplace(term, id);
        v.idf_(id) = std::log((1.0 + n) / (1.0 + count)) + 1.0;
    }
    if (!options.use_svd) return v;

    Eigen::MatrixXd x(static_cast<Eigen::Index>(docs.size()), v.idf_.size());
    for (size_t d = 0; d < docs.size(); ++d) x.row(static_cast<Eigen::Index>(d)) = v.tfidf(corpus[d]).transpose();
    const Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinV);
    const auto& sigma = svd.singularValues();
    Eigen::Index rank = 0;
    while (rank < sigma.size() && sigma(rank) > 1e-10 * sigma(0)) ++rank;
    const Eigen::Index k = std::min<Eigen::Index>(rank, options.components);
    v.basis_ = svd.matrixV().leftCols(k).transpose();
    for (Eigen::Index r = 0; r < k; ++r) {
        Eigen::Index at = 0;
        v.basis_.row(r).cwiseAbs().maxCoeff(&at);
        if (v.basis_(r, at) < 0) v.basis_.row(r) *= -1.0;
    }
    return v;
}

Eigen::VectorXd LsaVectorizer::tfidf(std::string_view text) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(idf_.size());
    for (const auto& t : tokenize(text, options_.tokenize))
        if (const auto it = vocabulary_.find(t); it != vocabulary_.end()) out(it->second) += 1.0;
    return out.cwiseProduct(idf_);
}

Eigen::VectorXd LsaVectorizer::transform(std::string_view text) const {
    const Eigen::VectorXd x = tfidf(text);
    return basis_.rows() > 0 ? Eigen::VectorXd(basis_ * x) : x;
}

double LsaVectorizer::similarity(std::string_view a, std::string_view b) const {
    return cosine(transform(a), transform(b));
}

double cosine(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    const double nu = u.norm(), nv = v.norm();
    if (nu == 0.0 || nv == 0.0) return 0.0;
    return std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
}

}  // namespace muse::text
