#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace qrw {

// Term extraction used by mining, reward keys, policy features and the
// term-match retriever. Rules:
//   - ASCII letters are lowercased; ASCII punctuation splits tokens.
//   - CJK runs fall back to character bigrams (a lone CJK character is kept
//     as a single term).
//   - Other non-ASCII codepoints are kept verbatim inside the current token.
std::set<std::string> tokenize_terms(std::string_view text);

// Same segmentation, but order- and multiplicity-preserving, and CJK runs
// are kept whole. Used wherever queries act as keys (oracle, fake index,
// candidate texts): lowercases, strips ASCII punctuation, collapses
// whitespace.
std::string normalize_query(std::string_view query);

// Ordered token sequence under the normalize_query segmentation.
std::vector<std::string> query_tokens(std::string_view query);

// |a ∩ b| / |a ∪ b|; defined as 0 when both sets are empty.
double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

bool terms_intersect(const std::set<std::string>& a, const std::set<std::string>& b);

}  // namespace qrw
