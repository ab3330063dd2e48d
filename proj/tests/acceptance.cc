// Copyright 2026 The wop Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Each check pairs the library with an oracle coded
// here from first principles.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "test_util.h"
#include "wop/attention.h"
#include "wop/attnprobe.h"
#include "wop/corpus.h"
#include "wop/error.h"
#include "wop/explain.h"
#include "wop/filter.h"
#include "wop/gateway.h"
#include "wop/lexicon.h"
#include "wop/metrics.h"
#include "wop/perturb.h"
#include "wop/random.h"
#include "wop/synthgen.h"

namespace wop {
namespace {

using testing::DataPath;
using Tokens = std::vector<std::string>;

// Collects failure notes; a criterion passes when none were recorded.
class Check {
 public:
  void Expect(bool ok, const std::string& what) {
    if (!ok && notes_.size() < 5) notes_.push_back(what);
    failed_ = failed_ || !ok;
  }
  bool failed() const { return failed_; }
  std::string Summary() const {
    std::string s;
    for (const auto& n : notes_) s += (s.empty() ? "" : "; ") + n;
    return s;
  }

 private:
  bool failed_ = false;
  std::vector<std::string> notes_;
};

std::string Str(const std::vector<std::string>& v) {
  std::string s = "[";
  for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s + "]";
}

// ---------------------------------------------------------------------------

void WosArithmetic(Check& c) {
  const double p[] = {50.69, 75.69, 83.19, 83.89, 84.04, 89.42};
  const double want[] = {0.99, 0.49, 0.34, 0.32, 0.32, 0.21};
  for (int i = 0; i < 6; ++i) {
    // Oracle: s = (100 - p) / 50, rounded half away from zero to 2 places.
    const double oracle = std::round((100.0 - p[i]) / 50.0 * 100.0) / 100.0;
    c.Expect(oracle == want[i], "oracle disagrees at " + std::to_string(p[i]));
    c.Expect(Wos(p[i]).rounded() == want[i],
             "wos(" + std::to_string(p[i]) + ") = " + std::to_string(Wos(p[i]).rounded()));
  }
}

// Left-to-right n-token blocks, the last one possibly short.
std::vector<Tokens> OracleChunks(const Tokens& toks, size_t n) {
  std::vector<Tokens> out;
  for (size_t i = 0; i < toks.size(); i += n) {
    out.emplace_back(toks.begin() + static_cast<long>(i),
                     toks.begin() + static_cast<long>(std::min(i + n, toks.size())));
  }
  return out;
}

bool ReorderingIsImpossible(const std::vector<Tokens>& chunks) {
  for (const auto& x : chunks) {
    for (const auto& y : chunks) {
      Tokens xy = x, yx = y;
      xy.insert(xy.end(), y.begin(), y.end());
      yx.insert(yx.end(), x.begin(), x.end());
      if (xy != yx) return false;
    }
  }
  return true;
}

void ShufflerProperties(Check& c) {
  const char* vocab[] = {"the", "cat", "sat", "on", "a", "mat", "and", "then", "it",
                         "ran", "far", "away", "from", "home", "dog", "big", "red",
                         "sun", "rose", "over", "hills", "we", "saw", "birds", "fly"};
  const char* terminals[] = {".", "?", "!", "", "?!"};
  Rng gen(20240601);
  size_t skipped = 0;
  for (size_t n = 1; n <= 3; ++n) {
    for (int k = 0; k < 10000; ++k) {
      TokenSentence ts;
      // At least two blocks.
      const size_t len = n + 1 + gen.Uniform(20);
      for (size_t i = 0; i < len; ++i) ts.tokens.push_back(vocab[gen.Uniform(25)]);
      ts.terminal_punct = terminals[gen.Uniform(5)];
      const uint64_t seed = gen.NextU64();
      const auto chunks = OracleChunks(ts.tokens, n);
      ShuffleResult r;
      try {
        r = ShuffleNgrams(ts, n, seed);
      } catch (const PerturbError&) {
        c.Expect(chunks.size() < 2 || ReorderingIsImpossible(chunks),
                 "refused a shufflable sentence");
        ++skipped;
        continue;
      }
      Tokens a = r.sentence.tokens, b = ts.tokens;
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      c.Expect(a == b, "multiset changed");
      c.Expect(r.sentence.terminal_punct == ts.terminal_punct, "terminal moved");
      c.Expect(r.sentence.tokens != ts.tokens, "identity output");
      // Block integrity: the output is the original blocks in some order.
      std::vector<size_t> sorted = r.permutation;
      std::sort(sorted.begin(), sorted.end());
      std::vector<size_t> iota(chunks.size());
      std::iota(iota.begin(), iota.end(), 0);
      c.Expect(sorted == iota, "permutation is not a bijection on blocks");
      if (sorted == iota) {
        Tokens rebuilt;
        for (size_t i : r.permutation) {
          rebuilt.insert(rebuilt.end(), chunks[i].begin(), chunks[i].end());
        }
        c.Expect(rebuilt == r.sentence.tokens, "blocks split or merged");
      }
      const ShuffleResult again = ShuffleNgrams(ts, n, seed);
      c.Expect(again.sentence == r.sentence && again.permutation == r.permutation,
               "not deterministic");
    }
  }
  c.Expect(skipped < 30, "too many degenerate draws: " + std::to_string(skipped));
}

void WorkedExample(Check& c) {
  const std::string q = "How can smoking marijuana give you lung cancer?";
  const TokenSentence ts = Tokenize(q);
  c.Expect(ts.terminal_punct == "?", "terminal is '" + ts.terminal_punct + "'");
  std::vector<std::string> joined;
  for (const auto& ch : ChunkNgrams(ts, 3)) {
    std::string s;
    for (const auto& t : ch) s += (s.empty() ? "" : " ") + t;
    joined.push_back(s);
  }
  c.Expect(joined == std::vector<std::string>{"How can smoking", "marijuana give you",
                                              "lung cancer"},
           "3-gram chunks " + Str(joined));
  const std::pair<size_t, std::string> targets[] = {
      {3, "lung cancer marijuana give you How can smoking?"},
      {2, "smoking marijuana lung cancer give you How can?"},
      {1, "marijuana can cancer How you smoking give lung?"}};
  for (const auto& [n, want] : targets) {
    const size_t blocks = ChunkNgrams(ts, n).size();
    std::vector<size_t> perm(blocks);
    std::iota(perm.begin(), perm.end(), 0);
    bool reachable = false;
    do {
      reachable = ApplyChunkPermutation(ts, n, perm).Render() == want;
    } while (!reachable && std::next_permutation(perm.begin(), perm.end()));
    c.Expect(reachable, std::to_string(n) + "-gram target unreachable");
    // The shuffler itself emits it for some seed.
    bool emitted = false;
    for (uint64_t seed = 0; seed < 400000 && !emitted; ++seed) {
      emitted = ShuffleNgrams(ts, n, seed).permutation == perm;
    }
    c.Expect(emitted, std::to_string(n) + "-gram target never drawn");
  }
}

// Solves A x = b by Gaussian elimination with partial pivoting.
std::vector<long double> Solve(std::vector<std::vector<long double>> a,
                               std::vector<long double> b) {
  const size_t n = b.size();
  for (size_t col = 0; col < n; ++col) {
    size_t piv = col;
    for (size_t r = col + 1; r < n; ++r) {
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    }
    std::swap(a[col], a[piv]);
    std::swap(b[col], b[piv]);
    for (size_t r = col + 1; r < n; ++r) {
      const long double f = a[r][col] / a[col][col];
      for (size_t k = col; k < n; ++k) a[r][k] -= f * a[col][k];
      b[r] -= f * b[col];
    }
  }
  std::vector<long double> x(n);
  for (size_t i = n; i-- > 0;) {
    long double s = b[i];
    for (size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
    x[i] = s / a[i][i];
  }
  return x;
}

void LimeOracle(Check& c) {
  const PolarityLexicon& lex = DefaultLexicon();
  std::vector<std::pair<std::string, double>> polar(lex.entries().begin(),
                                                    lex.entries().end());
  const char* neutral[] = {"the", "movie", "was", "a", "plot", "with", "and",
                           "story", "film", "its", "cast", "of", "this", "scene"};
  const auto& spec = BuiltinTaskSpec("sst2");
  LexiconClassifier clf(lex);
  Rng gen(77);
  const size_t kTokens = 8;
  const double kWidth = 25.0;
  for (int s = 0; s < 100; ++s) {
    std::vector<std::string> words;
    std::vector<double> pol;
    while (words.size() < kTokens) {
      if (gen.Uniform(10) < 3) {
        const auto& [w, p] = polar[gen.Uniform(polar.size())];
        words.push_back(w);
        pol.push_back(p);
      } else {
        words.push_back(neutral[gen.Uniform(14)]);
        pol.push_back(0.0);
      }
    }
    if (std::all_of(pol.begin(), pol.end(), [](double p) { return p == 0.0; })) {
      const auto& [w, p] = polar[gen.Uniform(polar.size())];
      const size_t at = gen.Uniform(kTokens);
      words[at] = w;
      pol[at] = p;
    }
    Example ex;
    ex.id = "s" + std::to_string(s);
    std::string text;
    for (const auto& w : words) text += (text.empty() ? "" : " ") + w;
    ex.fields = {text + "."};
    ex.gold_label = std::string("1");

    AttributionConfig cfg;
    cfg.kernel_width = kWidth;
    const AttributionMap map = Attribute(clf, spec, ex, 0, cfg);
    c.Expect(map.n_samples == 255, "expected the full mask cube");

    // Oracle: f(m) = P(full-text label | kept words), kernel on cosine
    // distance, normal equations with an intercept.
    auto logistic = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
    const double full = std::accumulate(pol.begin(), pol.end(), 0.0);
    const bool positive = full > 0.0;
    const size_t dim = kTokens + 1;
    std::vector<std::vector<long double>> ata(dim, std::vector<long double>(dim, 0.0L));
    std::vector<long double> atb(dim, 0.0L);
    for (unsigned bits = 1; bits < (1u << kTokens); ++bits) {
      double score = 0.0;
      int on = 0;
      std::vector<double> x(dim, 0.0);
      x[0] = 1.0;
      for (size_t i = 0; i < kTokens; ++i) {
        if (bits >> i & 1u) {
          score += pol[i];
          ++on;
          x[i + 1] = 1.0;
        }
      }
      const double pp = logistic(score);
      const double y = positive ? pp : 1.0 - pp;
      const double d = 100.0 * (1.0 - std::sqrt(on / static_cast<double>(kTokens)));
      const double w = std::exp(-d * d / (kWidth * kWidth));
      for (size_t i = 0; i < dim; ++i) {
        atb[i] += w * x[i] * y;
        for (size_t j = 0; j < dim; ++j) ata[i][j] += w * x[i] * x[j];
      }
    }
    const auto beta = Solve(ata, atb);
    size_t top = 0;
    for (size_t i = 0; i < kTokens; ++i) {
      const double want = std::clamp(static_cast<double>(beta[i + 1]), -1.0, 1.0);
      c.Expect(std::fabs(map.token_scores[i] - want) <= 1e-9,
               ex.id + " token " + std::to_string(i) + " off by " +
                   std::to_string(map.token_scores[i] - want));
      if (std::fabs(map.token_scores[i]) > std::fabs(map.token_scores[top])) top = i;
    }
    double max_pol = 0.0;
    for (double p : pol) max_pol = std::max(max_pol, std::fabs(p));
    c.Expect(std::fabs(pol[top]) == max_pol,
             ex.id + " top-1 '" + words[top] + "' in \"" + text + "\"");
  }
}

double MeanAccuracy(Classifier& clf, const Dataset& real, const TaskSpec& spec,
                    uint64_t seed, int runs, std::vector<double>* each = nullptr) {
  double sum = 0.0;
  for (int r = 0; r < runs; ++r) {
    const ShuffledDataset sd =
        ShuffleDataset(real, spec, 1, DeriveRunSeed(seed, static_cast<uint64_t>(r)));
    const double p = Accuracy(PredictDataset(clf, spec, sd.dataset), sd.dataset);
    if (each) each->push_back(p);
    sum += p;
  }
  return sum / runs;
}

void EndToEndWos(Check& c) {
  const auto& spec = BuiltinTaskSpec("sst2");
  const Dataset raw = LoadDataset(DataPath("sst2_mini.tsv"), DataFormat::kTsv, spec);
  c.Expect(raw.size() == 200, "mini corpus has " + std::to_string(raw.size()));

  LexiconClassifier lexicon(DefaultLexicon());
  const Dataset lex_real = FilterExamples(raw, spec, lexicon, 42).dataset;
  std::vector<double> ps;
  const double lex_p = MeanAccuracy(lexicon, lex_real, spec, 42, 10, &ps);
  for (double p : ps) c.Expect(p == 100.0, "lexicon run scored " + std::to_string(p));
  c.Expect(Wos(lex_p).s == 0.0, "lexicon wos " + std::to_string(Wos(lex_p).s));

  FirstTokenClassifier first(DefaultLexicon());
  const Dataset ft_real = FilterExamples(raw, spec, first, 42).dataset;
  // Oracle: a 1-gram shuffle is uniform over reorderings that change the
  // sentence, so P(flip) = #{j : class(tok_j) != c0} (T-1)! / (T! - prod m_w!).
  double flip_sum = 0.0;
  for (const auto& ex : ft_real.examples) {
    const Tokens toks = Tokenize(ex.target(spec)).tokens;
    const auto cls = [&](const std::string& t) {
      return DefaultLexicon().Lookup(t).value_or(0.0) > 0.0;
    };
    const bool c0 = cls(toks[0]);
    const double t = static_cast<double>(toks.size());
    double other = 0.0;
    std::map<std::string, int> mult;
    for (const auto& tok : toks) {
      other += cls(tok) != c0 ? 1.0 : 0.0;
      ++mult[tok];
    }
    double same = 1.0;  // prod m_w! / T!
    double fact_t = std::tgamma(t + 1.0);
    for (const auto& [w, m] : mult) same *= std::tgamma(m + 1.0);
    flip_sum += other * std::tgamma(t) / (fact_t - same);
  }
  const double analytic_p = 100.0 * (1.0 - flip_sum / static_cast<double>(ft_real.size()));
  const double measured_p = MeanAccuracy(first, ft_real, spec, 42, 10);
  const double analytic_s = Wos(analytic_p).s;
  const double measured_s = Wos(measured_p).s;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "first-token s=%.4f vs analytic %.4f (p %.2f vs %.2f)",
                measured_s, analytic_s, measured_p, analytic_p);
  c.Expect(std::fabs(measured_s - analytic_s) <= 0.05, buf);
  std::printf("  note: %s\n", buf);
}

// Synthetic attention records ------------------------------------------------

struct SynthRecord {
  std::vector<std::vector<std::string>> words;  // per field
  std::vector<std::vector<std::string>> pieces;  // per word, flattened order
  AttentionRecord rec;
  std::vector<int> word_of;  // per token, -1 for specials
};

const char* kMatchVocab[] = {"manage", "managed", "apollo", "Apollo", "phillips",
                             "Phillip", "cat", "cats", "bat", "dog", "dogs",
                             "mueller", "muller", "ran", "run", "space"};

// Word -> pieces: long words sometimes split in two.
std::vector<std::string> PiecesOf(const std::string& word, Rng& gen) {
  std::string lower;
  for (char ch : word) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (lower.size() >= 5 && gen.Uniform(2) == 0) {
    const size_t cut = 2 + gen.Uniform(lower.size() - 3);
    return {lower.substr(0, cut), "##" + lower.substr(cut)};
  }
  return {lower};
}

// Lays out [CLS] field0 [SEP] field1 [SEP] with weights from fill(q, k).
SynthRecord Layout(const std::vector<std::vector<std::string>>& words,
                   const std::vector<std::vector<std::string>>& pieces, int layers,
                   int heads, const std::function<float(int, int, int)>& fill) {
  SynthRecord s;
  s.words = words;
  s.pieces = pieces;
  AttentionRecord& rec = s.rec;
  rec.example_id = "synthetic";
  rec.layers = layers;
  rec.heads = heads;
  auto add = [&](const std::string& tok, int seg, bool special, int word) {
    rec.tokens.push_back(tok);
    rec.segment_ids.push_back(seg);
    rec.special.push_back(special);
    s.word_of.push_back(word);
  };
  add("[CLS]", 0, true, -1);
  int w = 0;
  for (int f = 0; f < 2; ++f) {
    for (size_t i = 0; i < words[static_cast<size_t>(f)].size(); ++i, ++w) {
      for (const auto& p : pieces[static_cast<size_t>(w)]) add(p, f, false, w);
    }
    add("[SEP]", f, true, -1);
  }
  const int t = rec.num_tokens();
  rec.weights.assign(static_cast<size_t>(layers * heads * t * t), 0.0f);
  for (int lh = 0; lh < layers * heads; ++lh) {
    for (int q = 0; q < t; ++q) {
      double row = 0.0;
      std::vector<double> raw(static_cast<size_t>(t));
      for (int k = 0; k < t; ++k) row += raw[static_cast<size_t>(k)] = fill(lh, q, k);
      for (int k = 0; k < t; ++k) {
        rec.weights[static_cast<size_t>((lh * t + q) * t + k)] =
            static_cast<float>(raw[static_cast<size_t>(k)] / row);
      }
    }
  }
  return s;
}

SynthRecord RandomRecord(Rng& gen) {
  const int layers = 1 + static_cast<int>(gen.Uniform(4));
  const int heads = 1 + static_cast<int>(gen.Uniform(static_cast<uint64_t>(16 / layers)));
  std::vector<std::vector<std::string>> words(2);
  std::vector<std::vector<std::string>> pieces;
  size_t total = 0;
  for (size_t f = 0; f < 2; ++f) {
    const size_t count = 2 + gen.Uniform(3);
    for (size_t i = 0; i < count; ++i) {
      const std::string w = kMatchVocab[gen.Uniform(16)];
      words[f].push_back(w);
      pieces.push_back(PiecesOf(w, gen));
      total += pieces.back().size();
    }
  }
  // At most 9 pieces so T <= 12 with the three specials.
  for (size_t w = pieces.size(); total > 9 && w-- > 0;) {
    if (pieces[w].size() == 2) {
      pieces[w] = {pieces[w][0] + pieces[w][1].substr(2)};
      --total;
    }
  }
  return Layout(words, pieces, layers, heads, [&](int, int, int) {
    return static_cast<float>(0.05 + gen.UniformReal());
  });
}

int OracleLevenshtein(const std::string& a, const std::string& b) {
  // Recursive definition, memoized.
  std::vector<std::vector<int>> memo(a.size() + 1, std::vector<int>(b.size() + 1, -1));
  std::function<int(size_t, size_t)> d = [&](size_t i, size_t j) -> int {
    if (i == 0) return static_cast<int>(j);
    if (j == 0) return static_cast<int>(i);
    int& m = memo[i][j];
    if (m >= 0) return m;
    m = std::min({d(i - 1, j) + 1, d(i, j - 1) + 1,
                  d(i - 1, j - 1) + (a[i - 1] == b[j - 1] ? 0 : 1)});
    return m;
  };
  return d(a.size(), b.size());
}

struct OracleMatch {
  int layer = -1;
  int head = -1;
  std::set<std::tuple<int, int, std::string, std::string>> top3;
  int total_edit = 0;
};

OracleMatch Enumerate(const SynthRecord& s) {
  std::vector<std::string> words;
  std::vector<int> seg;
  for (int f = 0; f < 2; ++f) {
    for (const auto& w : s.words[static_cast<size_t>(f)]) {
      words.push_back(w);
      seg.push_back(f);
    }
  }
  const int nw = static_cast<int>(words.size());
  std::vector<int> npieces(static_cast<size_t>(nw), 0);
  for (int w : s.word_of) {
    if (w >= 0) ++npieces[static_cast<size_t>(w)];
  }
  const AttentionRecord& rec = s.rec;
  const int t = rec.num_tokens();
  OracleMatch best;
  for (int l = 0; l < rec.layers; ++l) {
    for (int h = 0; h < rec.heads; ++h) {
      std::vector<std::vector<double>> m(static_cast<size_t>(nw), std::vector<double>(static_cast<size_t>(nw), 0.0));
      for (int q = 0; q < t; ++q) {
        for (int k = 0; k < t; ++k) {
          const int wq = s.word_of[static_cast<size_t>(q)];
          const int wk = s.word_of[static_cast<size_t>(k)];
          if (wq < 0 || wk < 0) continue;
          m[static_cast<size_t>(wq)][static_cast<size_t>(wk)] += static_cast<double>(
              rec.weights[static_cast<size_t>(((l * rec.heads + h) * t + q) * t + k)]);
        }
      }
      std::vector<std::tuple<double, int, int>> cells;
      for (int q = 0; q < nw; ++q) {
        for (int k = 0; k < nw; ++k) {
          if (seg[static_cast<size_t>(q)] == seg[static_cast<size_t>(k)]) continue;
          cells.emplace_back(m[static_cast<size_t>(q)][static_cast<size_t>(k)] /
                                 npieces[static_cast<size_t>(q)],
                             q, k);
        }
      }
      // Heaviest triple by exhaustive search.
      double top = -1.0;
      size_t bi = 0, bj = 0, bk = 0;
      for (size_t i = 0; i < cells.size(); ++i) {
        for (size_t j = i + 1; j < cells.size(); ++j) {
          for (size_t k = j + 1; k < cells.size(); ++k) {
            const double sum = std::get<0>(cells[i]) + std::get<0>(cells[j]) +
                               std::get<0>(cells[k]);
            if (sum > top) {
              top = sum;
              bi = i, bj = j, bk = k;
            }
          }
        }
      }
      OracleMatch cand;
      cand.layer = l;
      cand.head = h;
      for (size_t idx : {bi, bj, bk}) {
        const auto [wt, q, k] = cells[idx];
        cand.top3.emplace(q, k, words[static_cast<size_t>(q)], words[static_cast<size_t>(k)]);
        cand.total_edit += OracleLevenshtein(words[static_cast<size_t>(q)],
                                             words[static_cast<size_t>(k)]);
      }
      if (best.layer < 0 || cand.total_edit < best.total_edit) best = cand;
    }
  }
  return best;
}

void MatcherOracle(Check& c) {
  c.Expect(Levenshtein("manage", "managed") == 1, "levenshtein(manage, managed) != 1");
  Rng gen(31337);
  int moved = 0;
  int edits = 0;
  for (int i = 0; i < 200; ++i) {
    const SynthRecord s = RandomRecord(gen);
    c.Expect(s.rec.num_tokens() <= 12 && s.rec.layers * s.rec.heads <= 16, "generator bounds");
    const MatchReport got = SelectMatrix(s.rec, s.words);
    const OracleMatch want = Enumerate(s);
    std::set<std::tuple<int, int, std::string, std::string>> got3;
    for (const auto& p : got.top3) got3.emplace(p.query, p.key, p.query_word, p.key_word);
    const std::string tag = "record " + std::to_string(i);
    c.Expect(got.layer == want.layer && got.head == want.head,
             tag + " head (" + std::to_string(got.layer) + "," + std::to_string(got.head) +
                 ") vs (" + std::to_string(want.layer) + "," + std::to_string(want.head) + ")");
    c.Expect(got3 == want.top3, tag + " top-3 differs");
    c.Expect(got.total_edit == want.total_edit, tag + " total_edit differs");
    moved += (want.layer != 0 || want.head != 0) ? 1 : 0;
    edits += want.total_edit;
  }
  std::printf("  note: chosen head beyond (0,0) in %d/200 records, mean total_edit %.2f\n",
              moved, edits / 200.0);
}

// Reverses the second field's word order in a record (or applies perm),
// moving token blocks and permuting the tensor to match.
SynthRecord PermuteSecondField(const SynthRecord& s, const std::vector<size_t>& perm) {
  const size_t n0 = s.words[0].size();
  std::vector<std::vector<std::string>> words = s.words;
  std::vector<std::vector<std::string>> pieces(s.pieces.begin(),
                                               s.pieces.begin() + static_cast<long>(n0));
  for (size_t i = 0; i < perm.size(); ++i) {
    words[1][i] = s.words[1][perm[i]];
    pieces.push_back(s.pieces[n0 + perm[i]]);
  }
  // Token mapping new -> old.
  std::vector<std::vector<int>> tokens_of(s.pieces.size());
  for (int t = 0; t < s.rec.num_tokens(); ++t) {
    if (s.word_of[static_cast<size_t>(t)] >= 0) {
      tokens_of[static_cast<size_t>(s.word_of[static_cast<size_t>(t)])].push_back(t);
    }
  }
  std::vector<int> old_of;
  old_of.push_back(0);
  for (size_t w = 0; w < n0; ++w) {
    for (int t : tokens_of[w]) old_of.push_back(t);
  }
  old_of.push_back(static_cast<int>(old_of.size()));  // first [SEP]
  for (size_t i = 0; i < perm.size(); ++i) {
    for (int t : tokens_of[n0 + perm[i]]) old_of.push_back(t);
  }
  old_of.push_back(s.rec.num_tokens() - 1);
  const AttentionRecord& src = s.rec;
  const int t = src.num_tokens();
  return Layout(words, pieces, src.layers, src.heads, [&](int lh, int q, int k) {
    return src.weights[static_cast<size_t>((lh * t + old_of[static_cast<size_t>(q)]) * t +
                                           old_of[static_cast<size_t>(k)])];
  });
}

SynthRecord ApolloRecord() {
  const Dataset ds = LoadDataset(DataPath("apollo_qnli.jsonl"), DataFormat::kJsonl,
                                 BuiltinTaskSpec("qnli"));
  const AttentionRecord rec = LoadAttn1(DataPath("attn/apollo.attn"));
  SynthRecord s;
  s.words = FieldWords(ds.examples[0]);
  s.rec = rec;
  // Rebuild the piece lists by spelling out each word left to right.
  std::vector<std::string> flat;
  for (const auto& f : s.words) flat.insert(flat.end(), f.begin(), f.end());
  size_t w = 0;
  std::string rest;
  for (int t = 0; t < rec.num_tokens(); ++t) {
    if (rec.special[static_cast<size_t>(t)]) {
      s.word_of.push_back(-1);
      continue;
    }
    if (rest.empty()) {
      for (char ch : flat[w]) rest += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
      s.pieces.emplace_back();
    }
    const std::string& tok = rec.tokens[static_cast<size_t>(t)];
    s.pieces.back().push_back(tok);
    s.word_of.push_back(static_cast<int>(w));
    rest.erase(0, tok.starts_with("##") ? tok.size() - 2 : tok.size());
    if (rest.empty()) ++w;
  }
  return s;
}

std::multiset<std::pair<std::string, std::string>> PairSet(const MatchReport& r) {
  std::multiset<std::pair<std::string, std::string>> out;
  for (const auto& p : r.top3) out.emplace(p.query_word, p.key_word);
  return out;
}

void MatcherPermutationInvariance(Check& c) {
  Rng gen(4242);
  const SynthRecord apollo = ApolloRecord();
  for (int i = 0; i < 500; ++i) {
    const SynthRecord s = i < 100 ? apollo : RandomRecord(gen);
    std::vector<size_t> perm(s.words[1].size());
    std::iota(perm.begin(), perm.end(), 0);
    gen.Shuffle(perm);
    const SynthRecord p = PermuteSecondField(s, perm);
    const MatchReport a = SelectMatrix(s.rec, s.words);
    const MatchReport b = SelectMatrix(p.rec, p.words);
    const std::string tag = "case " + std::to_string(i);
    c.Expect(a.total_edit == b.total_edit, tag + " total_edit changed");
    c.Expect(PairSet(a) == PairSet(b), tag + " word pairs changed");
  }
}

void ConsistencyGrouping(Check& c) {
  const auto& spec = BuiltinTaskSpec("sst2");
  const Dataset raw = LoadDataset(DataPath("sst2_mini.tsv"), DataFormat::kTsv, spec);
  LexiconClassifier lexicon(DefaultLexicon());
  FirstTokenClassifier first(DefaultLexicon());
  const Dataset real = FilterExamples(raw, spec, lexicon, 42).dataset;
  std::set<std::string> ids;
  for (const auto& ex : real.examples) ids.insert(ex.id);
  for (Classifier* clf : std::initializer_list<Classifier*>{&lexicon, &first}) {
    const ConsistencyGroups g = ComputeConsistencyGroups(real, spec, *clf, 5, 42);
    std::multiset<std::string> seen;
    for (const auto& [m, members] : g.groups) seen.insert(members.begin(), members.end());
    c.Expect(seen.size() == ids.size() && std::set<std::string>(seen.begin(), seen.end()) == ids,
             clf->name() + " groups do not partition the ids");
    if (clf == &lexicon) {
      const auto it = g.groups.find(0);
      c.Expect(it != g.groups.end() && it->second.size() == real.size(),
               "lexicon examples outside group 0/5");
    }
  }
}

void SyntheticGeneration(Check& c) {
  const auto& spec = BuiltinTaskSpec("sst2");
  const Dataset ds = LoadDataset(DataPath("synth_source_500.tsv"), DataFormat::kTsv, spec);
  c.Expect(ds.size() == 500, "fixture size " + std::to_string(ds.size()));
  const SyntheticSet set = BuildSyntheticSplit(ds, spec, 2024);
  c.Expect(set.examples.size() == 2 * ds.size(),
           "output size " + std::to_string(set.examples.size()));
  std::map<std::string, std::vector<const SyntheticExample*>> by_source;
  for (const auto& e : set.examples) by_source[e.source_id].push_back(&e);
  for (const auto& ex : ds.examples) {
    const auto it = by_source.find(ex.id);
    if (it == by_source.end() || it->second.size() != 2) {
      c.Expect(false, "source " + ex.id + " lacks a real/fake pair");
      continue;
    }
    const SyntheticExample* real = it->second[0];
    const SyntheticExample* fake = it->second[1];
    if (real->label != kRealLabel) std::swap(real, fake);
    c.Expect(real->label == kRealLabel && fake->label == kFakeLabel, ex.id + " labels");
    const SwapRecord& sw = set.swaps.at(ex.id);
    // Words ahead of the pinned terminal.
    auto body = [&](const std::string& text) {
      std::vector<std::string> out;
      std::istringstream in(text.substr(0, text.size() - sw.terminal.size()));
      for (std::string w; in >> w;) out.push_back(w);
      return out;
    };
    c.Expect(real->text.ends_with(sw.terminal) && fake->text.ends_with(sw.terminal),
             ex.id + " terminal");
    const auto a = body(real->text);
    const auto b = body(fake->text);
    std::vector<size_t> diff;
    for (size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
      if (a[i] != b[i]) diff.push_back(i);
    }
    const bool one_swap = a.size() == b.size() && diff.size() == 2 &&
                          a[diff[0]] == b[diff[1]] && a[diff[1]] == b[diff[0]];
    c.Expect(one_swap, ex.id + " is not a single transposition");
    c.Expect(ApplyTransposition(fake->text, sw) == real->text, ex.id + " swap does not undo");
  }
}

double ClosedFormSpearman(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  auto ranks = [n](const std::vector<double>& v) {
    std::vector<double> r(n);
    for (size_t i = 0; i < n; ++i) {
      r[i] = 1.0 + static_cast<double>(std::count_if(v.begin(), v.end(),
                                                     [&](double o) { return o < v[i]; }));
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  double d2 = 0.0;
  for (size_t i = 0; i < n; ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  const double nn = static_cast<double>(n);
  return 100.0 * (1.0 - 6.0 * d2 / (nn * (nn * nn - 1.0)));
}

void SpearmanCheck(Check& c) {
  Rng gen(99);
  for (int i = 0; i < 100; ++i) {
    const size_t n = 3 + gen.Uniform(60);
    std::vector<double> x(n), y(n);
    for (size_t k = 0; k < n; ++k) {
      x[k] = gen.UniformReal() * 10.0 - 5.0;
      y[k] = gen.UniformReal();
    }
    const double got = Spearman(x, y);
    const double want = ClosedFormSpearman(x, y);
    c.Expect(std::fabs(got - want) <= 1e-9, "vector " + std::to_string(i) + " off by " +
                                                 std::to_string(got - want));
    std::vector<double> up(n), down(n);
    for (size_t k = 0; k < n; ++k) {
      up[k] = std::exp(x[k]);
      down[k] = -x[k] * x[k] * x[k];
    }
    c.Expect(Spearman(x, up) == 100.0, "increasing map != 100");
    c.Expect(Spearman(x, down) == -100.0, "decreasing map != -100");
  }
}

struct Criterion {
  const char* name;
  double limit_seconds;
  void (*run)(Check&);
};

}  // namespace
}  // namespace wop

int main() {
  using wop::Criterion;
  const Criterion criteria[] = {
      {"wos-arithmetic", 1.0, wop::WosArithmetic},
      {"shuffler-properties", 10.0, wop::ShufflerProperties},
      {"worked-example-shuffles", 1.0, wop::WorkedExample},
      {"lime-oracle", 30.0, wop::LimeOracle},
      {"end-to-end-wos", 60.0, wop::EndToEndWos},
      {"attention-matcher-oracle", 30.0, wop::MatcherOracle},
      {"matcher-permutation-invariance", 30.0, wop::MatcherPermutationInvariance},
      {"consistency-groups", 30.0, wop::ConsistencyGrouping},
      {"synthetic-generation", 30.0, wop::SyntheticGeneration},
      {"spearman", 10.0, wop::SpearmanCheck},
  };
  int failures = 0;
  for (const auto& cr : criteria) {
    wop::Check check;
    const auto start = std::chrono::steady_clock::now();
    try {
      cr.run(check);
    } catch (const std::exception& e) {
      check.Expect(false, std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > cr.limit_seconds) {
      check.Expect(false, "took " + std::to_string(secs) + "s, limit " +
                              std::to_string(cr.limit_seconds) + "s");
    }
    if (check.failed()) {
      ++failures;
      std::printf("FAIL %s (%.2fs): %s\n", cr.name, secs, check.Summary().c_str());
    } else {
      std::printf("PASS %s (%.2fs)\n", cr.name, secs);
    }
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
