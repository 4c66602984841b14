#include "qrw/text.hpp"

#include <algorithm>
#include <cstdint>

namespace qrw {
namespace {

bool is_cjk(char32_t cp) {
  return (cp >= 0x3040 && cp <= 0x30FF)    // hiragana, katakana
      || (cp >= 0x3400 && cp <= 0x4DBF)    // CJK ext A
      || (cp >= 0x4E00 && cp <= 0x9FFF)    // CJK unified
      || (cp >= 0xAC00 && cp <= 0xD7AF)    // hangul syllables
      || (cp >= 0xF900 && cp <= 0xFAFF)    // CJK compatibility
      || (cp >= 0x20000 && cp <= 0x2A6DF); // CJK ext B
}

// Decodes one UTF-8 codepoint at s[i]; advances i. Invalid bytes are
// consumed one at a time and reported as U+FFFD (treated as a separator).
char32_t decode_utf8(std::string_view s, std::size_t& i) {
  const auto byte = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
  const unsigned char b0 = byte(i);
  std::size_t len = 0;
  char32_t cp = 0;
  if (b0 < 0x80) {
    i += 1;
    return b0;
  } else if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    i += 1;
    return 0xFFFD;
  }
  if (i + len > s.size()) {
    i += 1;
    return 0xFFFD;
  }
  for (std::size_t k = 1; k < len; ++k) {
    const unsigned char bk = byte(i + k);
    if ((bk & 0xC0) != 0x80) {
      i += 1;
      return 0xFFFD;
    }
    cp = (cp << 6) | (bk & 0x3F);
  }
  i += len;
  return cp;
}

void encode_utf8(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

// Shared segmentation pass. Emits plain tokens and CJK runs (as codepoint
// vectors) in input order.
struct Segments {
  std::vector<std::string> tokens;                 // non-CJK tokens
  std::vector<std::vector<char32_t>> cjk_runs;     // CJK runs
  std::vector<std::pair<bool, std::size_t>> order; // (is_cjk, index) stream
};

Segments segment(std::string_view text) {
  Segments out;
  std::string token;
  std::vector<char32_t> run;
  const auto flush_token = [&] {
    if (!token.empty()) {
      out.order.emplace_back(false, out.tokens.size());
      out.tokens.push_back(std::move(token));
      token.clear();
    }
  };
  const auto flush_run = [&] {
    if (!run.empty()) {
      out.order.emplace_back(true, out.cjk_runs.size());
      out.cjk_runs.push_back(std::move(run));
      run.clear();
    }
  };
  std::size_t i = 0;
  while (i < text.size()) {
    const char32_t cp = decode_utf8(text, i);
    if (cp < 0x80) {
      flush_run();
      if ((cp >= 'a' && cp <= 'z') || (cp >= '0' && cp <= '9')) {
        token.push_back(static_cast<char>(cp));
      } else if (cp >= 'A' && cp <= 'Z') {
        token.push_back(static_cast<char>(cp - 'A' + 'a'));
      } else {
        flush_token();  // ASCII punctuation / whitespace separate tokens
      }
    } else if (is_cjk(cp)) {
      flush_token();
      run.push_back(cp);
    } else if (cp == 0xFFFD) {
      flush_token();
      flush_run();
    } else {
      flush_run();
      encode_utf8(cp, token);  // other scripts kept verbatim
    }
  }
  flush_token();
  flush_run();
  return out;
}

std::string encode_run(const std::vector<char32_t>& run, std::size_t from, std::size_t n) {
  std::string s;
  for (std::size_t k = 0; k < n; ++k) encode_utf8(run[from + k], s);
  return s;
}

}  // namespace

std::set<std::string> tokenize_terms(std::string_view text) {
  const Segments seg = segment(text);
  std::set<std::string> terms(seg.tokens.begin(), seg.tokens.end());
  for (const auto& run : seg.cjk_runs) {
    if (run.size() == 1) {
      terms.insert(encode_run(run, 0, 1));
    } else {
      for (std::size_t k = 0; k + 1 < run.size(); ++k) {
        terms.insert(encode_run(run, k, 2));
      }
    }
  }
  return terms;
}

std::vector<std::string> query_tokens(std::string_view query) {
  const Segments seg = segment(query);
  std::vector<std::string> tokens;
  tokens.reserve(seg.order.size());
  for (const auto& [cjk, idx] : seg.order) {
    tokens.push_back(cjk ? encode_run(seg.cjk_runs[idx], 0, seg.cjk_runs[idx].size())
                         : seg.tokens[idx]);
  }
  return tokens;
}

std::string normalize_query(std::string_view query) {
  std::string out;
  for (const std::string& tok : query_tokens(query)) {
    if (!out.empty()) out.push_back(' ');
    out += tok;
  }
  return out;
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 0.0;
  std::size_t inter = 0;
  for (const auto& t : a) inter += b.count(t);
  const std::size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

bool terms_intersect(const std::set<std::string>& a, const std::set<std::string>& b) {
  const auto& small = a.size() <= b.size() ? a : b;
  const auto& large = a.size() <= b.size() ? b : a;
  return std::any_of(small.begin(), small.end(),
                     [&](const std::string& t) { return large.count(t) > 0; });
}

}  // namespace qrw
