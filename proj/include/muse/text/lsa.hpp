#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "muse/text/metrics.hpp"

namespace muse::text {

struct LsaOptions {
    int components = 100;  // capped at the rank of the corpus matrix
    bool use_svd = true;
    TokenizeOptions tokenize;
};

/// TF-IDF vectoriser with an optional truncated-SVD projection fitted on a
/// corpus. idf(t) = ln((1 + N) / (1 + df(t))) + 1; terms outside the
/// vocabulary are ignored.
class LsaVectorizer {
public:
    /// Errors: EmptyVocabulary.
    static LsaVectorizer fit(const std::vector<std::string>& corpus, const LsaOptions& options = {});

    Eigen::VectorXd tfidf(std::string_view text) const;
    /// TF-IDF vector, projected onto the SVD basis when enabled.
    Eigen::VectorXd transform(std::string_view text) const;
    double similarity(std::string_view a, std::string_view b) const;

    size_t vocabulary_size() const { return vocabulary_.size(); }
    int dims() const { return basis_.rows() > 0 ? static_cast<int>(basis_.rows()) : static_cast<int>(vocabulary_.size()); }

private:
    LsaOptions options_;
    std::map<std::string, Eigen::Index> vocabulary_;
    Eigen::VectorXd idf_;
    Eigen::MatrixXd basis_;  // k × V, empty without SVD
};

/// ⟨u,v⟩ / (‖u‖·‖v‖), 0 when either norm is 0.
double cosine(const Eigen::VectorXd& u, const Eigen::VectorXd& v);

}  // namespace muse::text
