#!/usr/bin/env python3
# Copyright 2026 The wop Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Regenerates the test fixtures under tests/data and tests/golden.

Everything here is computed independently of the C++ code, so the tests that
read these files act as cross-checks. Output is deterministic; rerunning the
script must leave the tree unchanged.
"""

import json
import math
import os
import random
import struct

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
DATA = os.path.join(ROOT, "tests", "data")
GOLDEN = os.path.join(ROOT, "tests", "golden")

POSITIVE = """good great excellent wonderful thrilling brilliant delightful superb
beautiful charming funny enjoyable fresh smart touching love best masterful
engaging gorgeous powerful remarkable stunning witty warm clever compelling
moving fine solid""".split()
NEGATIVE = """bad awful terrible boring dull tedious mess worst weak lame stupid
bland clumsy predictable pointless flat tiresome disappointing poor ugly
annoying hollow lifeless painful forgettable shallow sloppy mediocre cheap
horrible""".split()
NEUTRAL = """film story cast director plot its with a and of movie scenes ending
characters script performances this that was is feels sometimes quite really
very overall camera music lead actor picture comedy drama moments second half
opening dialogue pacing tone editing audience""".split()


def dumps(obj):
  return json.dumps(obj, sort_keys=True, separators=(",", ":"),
                    ensure_ascii=False)


def write(path, text, binary=False):
  os.makedirs(os.path.dirname(path), exist_ok=True)
  with open(path, "wb" if binary else "w", encoding=None if binary else "utf-8",
            newline=None if binary else "\n") as f:
    f.write(text)


def strip_punct(tok):
  b, e = 0, len(tok)
  while b < e and not tok[b].isalnum() and tok[b].isascii():
    b += 1
  while e > b and not tok[e - 1].isalnum() and tok[e - 1].isascii():
    e -= 1
  return tok[b:e].lower()


def polarity(tok):
  w = strip_punct(tok)
  if w in POSITIVE:
    return 1
  if w in NEGATIVE:
    return -1
  return 0


def lexicon_score(fields):
  return sum(polarity(t) for f in fields for t in f.split())


def logistic(x):
  return 1.0 / (1.0 + math.exp(-x))


# ---------------------------------------------------------------------------
# Sentence splitter cases: expected sentence count, then text.

SPLIT_CASES = [
    (1, "The cat sat on the mat."),
    (2, "The cat sat on the mat. The dog barked."),
    (3, "It rained. We stayed in. Nobody minded."),
    (1, "Mr. Smith went to Washington."),
    (1, "Dr. Jones and Mrs. Brown arrived late."),
    (1, "The U.S. Army left the base."),
    (1, "J. K. Rowling wrote the books."),
    (1, "He lives in the U.S.A. and works remotely."),
    (2, "Who called? It was Sam."),
    (2, "Stop! The bridge is out."),
    (1, "What time is it?"),
    (2, "Really?! That cannot be right."),
    (2, "She said \"go home.\" Then she left."),
    (1, "She said \"go home.\""),
    (2, "The end (finally.) Now we rest."),
    (1, "The price was 3.5 dollars per unit."),
    (1, "Version 2.0 ships next week."),
    (2, "Sales rose. 2019 was a record year."),
    (1, "Apples, pears, etc. are on sale."),
    (1, "Bring snacks, e.g. chips and salsa."),
    (1, "It is late, i.e. past midnight."),
    (1, "Meet me at 5 p.m. tomorrow."),
    (1, "The meeting ended... and everyone left."),
    (2, "The meeting ended... Everyone left."),
    (1, "He paused. and then continued."),
    (1, "This is fine"),
    (1, "no punctuation at all here"),
    (1, "Trailing spaces are ignored.   "),
    (1, "   Leading spaces are ignored too."),
    (2, "First line.\nSecond line."),
    (2, "Tabs separate.\tThis one too."),
    (1, "Email me at bob@example.com today."),
    (1, "See example.com for details."),
    (2, "Prof. Lee teaches math. Students love her."),
    (1, "Gen. Patton led the army."),
    (1, "He was born on Jan. 5 in Ohio."),
    (2, "I agree. (Mostly.)"),
    (2, "Why not? 'Because,' she said."),
    (1, "The ratio is 1:2."),
    (2, "Wait. What happened?"),
    (1, "Ph.D. students work hard."),
    (2, "It is over. It is really over!"),
    (1, "The temperature fell to -5 degrees."),
    (2, "He won. “Amazing,” they said."),
    (1, "He said “that was close.”"),
    (1, "Mt. Everest is tall."),
    (2, "Done! Next task."),
    (1, "Is it A. or B.?"),
    (3, "One. Two. Three."),
    (1, "St. Louis is a city in Missouri."),
]

# ---------------------------------------------------------------------------
# Mini sentiment corpus. Gold labels follow the lexicon sign, and positive
# sentences open with a positive word, so both built-in single-sentence
# classifiers get every example right.


def sentiment_corpus(rng, n_each):
  seen = set()
  pos, neg = [], []
  while len(pos) < n_each:
    first = rng.choice(POSITIVE)
    body = rng.sample(NEUTRAL, rng.randint(3, 8))
    extra = []
    if rng.random() < 0.4:
      extra.append(rng.choice(POSITIVE))
    if rng.random() < 0.3:
      extra.append(rng.choice(NEGATIVE))
    for w in extra:
      body.insert(rng.randrange(len(body) + 1), w)
    toks = [first.capitalize()] + body
    if len(set(w.lower() for w in toks)) != len(toks):
      continue
    text = " ".join(toks) + "."
    if lexicon_score([text]) <= 0 or text in seen:
      continue
    seen.add(text)
    pos.append(text)
  while len(neg) < n_each:
    opener = rng.choice(NEUTRAL + NEGATIVE)
    body = rng.sample(NEUTRAL, rng.randint(3, 8))
    extra = [rng.choice(NEGATIVE)] if rng.random() < 0.7 else []
    if extra and rng.random() < 0.5:
      extra.append(rng.choice(POSITIVE))
    for w in extra:
      body.insert(rng.randrange(len(body) + 1), w)
    toks = [opener.capitalize()] + body
    if len(set(w.lower() for w in toks)) != len(toks):
      continue
    text = " ".join(toks) + "."
    if lexicon_score([text]) > 0 or text in seen:
      continue
    seen.add(text)
    neg.append(text)
  rows = [(t, "1") for t in pos] + [(t, "0") for t in neg]
  rng.shuffle(rows)
  return rows


def make_sst2(rng):
  rows = sentiment_corpus(rng, 100)
  lines = ["sentence\tlabel"] + [f"{t}\t{l}" for t, l in rows]
  write(os.path.join(DATA, "sst2_mini.tsv"), "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Pair-task fixtures reproducing the three-step filtering counts.

SUBJECTS = ["the council", "the company", "a spokesman", "the minister",
            "the team", "the court", "the board", "the senator", "the union",
            "the museum", "the police", "the agency", "the school",
            "the hospital", "the airline"]
VERBS = """approved rejected announced delayed reviewed funded opened closed
expanded cancelled criticized praised""".split()
OBJECTS = ["the plan", "the budget", "a merger", "the new policy",
           "the contract", "the project", "the proposal", "the report",
           "the offer", "the exhibit", "the study", "the route"]
WHEN = ["on Monday", "last week", "in March", "after a long debate",
        "before the vote", "during the summer", "at a press conference",
        "in the morning", "on Friday", "late on Tuesday"]


def pair_sentence(rng, idx):
  s = rng.choice(SUBJECTS)
  v = rng.choice(VERBS)
  o = rng.choice(OBJECTS)
  w = rng.choice(WHEN)
  return f"{s.capitalize()} {v} {o} {w} (case {idx})."


def make_pair_task(rng, name, labels, counts, correct, bad_index, header):
  """counts/correct are per label; bad_index is a row whose target fails
  the single-sentence filter (or None)."""
  rows = []
  for label, n in zip(labels, counts):
    rows.extend([label] * n)
  rng.shuffle(rows)
  neg, pos = labels
  # Which rows the predictions table gets right, per label.
  by_label = {l: [i for i, r in enumerate(rows) if r == l] for l in labels}
  bad_row = None
  if bad_index is not None:
    bad_row = by_label[bad_index][0]
  wrong = set()
  for label, ok in zip(labels, correct):
    eligible = [i for i in by_label[label] if i != bad_row]
    rng.shuffle(eligible)
    wrong.update(eligible[ok:])
  lines = [header]
  preds = []
  target_is_second = name == "rte"
  for i, label in enumerate(rows):
    s1 = pair_sentence(rng, i)
    s2 = pair_sentence(rng, i + 1000)
    if i == bad_row:
      bad = "The vote failed. Members left early."
      if target_is_second:
        s2 = bad
      else:
        s1 = bad
    lines.append(f"{i}\t{s1}\t{s2}\t{label}")
    predicted = label if i not in wrong else (pos if label == neg else neg)
    preds.append({"confidence": 0.9, "id": str(i), "label": predicted})
  write(os.path.join(DATA, f"{name}_dev.tsv"), "\n".join(lines) + "\n")
  write(os.path.join(DATA, f"{name}_preds.jsonl"),
        "".join(dumps(p) + "\n" for p in preds))


# ---------------------------------------------------------------------------
# Synthetic-generation source: 500 single sentences, all of which pass the
# sentence filter, with a few awkward shapes mixed in.

AWKWARD = [
    "the the the cat sat down.",
    "Wait , wait , what happened here ?!",
    "He said \"stop that now.\"",
    "Nothing ends this line at all",
    "Is it really over??",
    "A a a a b.",
    "Go go go now!",
    "Numbers like 3.14 and 2.71 appear here.",
    "(Parenthetical text sits right here.)",
    "Café owners naïvely smile today.",
]


def make_synth_source(rng):
  texts = list(AWKWARD)
  seen = set(texts)
  while len(texts) < 500:
    k = rng.randint(4, 14)
    words = [rng.choice(NEUTRAL + POSITIVE + NEGATIVE) for _ in range(k)]
    words[0] = words[0].capitalize()
    end = rng.choice([".", ".", ".", "!", "?", ""])
    text = " ".join(words) + end
    if text in seen:
      continue
    seen.add(text)
    texts.append(text)
  lines = ["sentence\tlabel"]
  for i, t in enumerate(texts):
    lines.append(f"{t}\t{i % 2}")
  write(os.path.join(DATA, "synth_source_500.tsv"), "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Attention fixture for the word-matching example question/answer pair.

APOLLO_Q = "How long did Phillips manage the Apollo missions?"
APOLLO_A = ("Mueller agreed, and Phillips managed Apollo from January 1964, "
            "until it achieved the first manned landing in July 1969, after "
            "which he returned to Air Force duty.")
SPLITS = {"mueller": ["mu", "##eller"], "manned": ["man", "##ned"],
          "achieved": ["achieve", "##d"]}


def pieces(word):
  w = word.lower()
  core = w.rstrip(",.?!")
  tail = w[len(core):]
  out = list(SPLITS.get(core, [core]))
  out.extend(tail)
  return out


def levenshtein(a, b):
  prev = list(range(len(b) + 1))
  for i, ca in enumerate(a, 1):
    cur = [i]
    for j, cb in enumerate(b, 1):
      cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
    prev = cur
  return prev[-1]


def make_apollo(rng):
  qw, aw = APOLLO_Q.split(), APOLLO_A.split()
  tokens, segs, special, owner = ["[CLS]"], [0], [True], [None]
  for i, w in enumerate(qw):
    for p in pieces(w):
      tokens.append(p); segs.append(0); special.append(False)
      owner.append((0, i))
  tokens.append("[SEP]"); segs.append(0); special.append(True); owner.append(None)
  for i, w in enumerate(aw):
    for p in pieces(w):
      tokens.append(p); segs.append(1); special.append(False)
      owner.append((1, i))
  tokens.append("[SEP]"); segs.append(1); special.append(True); owner.append(None)
  t = len(tokens)

  def first_piece(seg, word):
    return next(k for k, o in enumerate(owner) if o == (seg, word))

  L, H = 2, 8
  matcher = [(3, 3), (4, 4), (6, 5)]  # phillips, manage->managed, apollo
  for qi, ai in matcher:
    assert levenshtein(qw[qi].lower().strip("?"), aw[ai].lower().strip(",")) <= 1
  # Decoy pairs link clearly different words.
  decoys = [(0, 9), (1, 26), (2, 8), (7, 16), (5, 22), (1, 14), (0, 19),
            (2, 25), (7, 11), (3, 21), (5, 13), (4, 24)]
  weights = []
  plan = {}
  for l in range(L):
    for h in range(H):
      if (l, h) == (0, 7):
        plan[(l, h)] = matcher
      else:
        picks = rng.sample(decoys, 3)
        total = sum(levenshtein(qw[q].lower(), aw[a].lower()) for q, a in picks)
        assert total > kEditBudgetCheck
        plan[(l, h)] = picks
  for l in range(L):
    for h in range(H):
      rows = []
      planted = {}
      for q, a in plan[(l, h)]:
        planted[(first_piece(0, q), first_piece(1, a))] = 40.0 + rng.random()
      for r in range(t):
        row = [1.0 + rng.random() for _ in range(t)]
        for (pq, pk), w in planted.items():
          if pq == r:
            row[pk] = w
        s = sum(row)
        rows.append([x / s for x in row])
      for row in rows:
        weights.extend(row)
  blob = b"ATTN1" + struct.pack("<III", L, H, t)
  blob += b"".join(struct.pack("<f", w) for w in weights)
  meta = {"id": "apollo", "segment_ids": segs, "special": special,
          "tokens": tokens}
  blob += dumps(meta).encode("utf-8")
  write(os.path.join(DATA, "attn", "apollo.attn"), blob, binary=True)
  ex = {"id": "apollo", "label": "entailment", "question": APOLLO_Q,
        "sentence": APOLLO_A}
  write(os.path.join(DATA, "apollo_qnli.jsonl"), dumps(ex) + "\n")


kEditBudgetCheck = 1  # decoys must lose to the matcher's total of 1


# ---------------------------------------------------------------------------
# Golden files for the wire protocol and the ATTN1 layout.


def make_protocol_golden():
  requests = []
  responses = []
  requests.append({"op": "info"})
  responses.append({"attention": False, "name": "builtin:lexicon", "op": "info"})

  def predict(task, examples, ablate=None):
    req = {"examples": [{"fields": f, "id": i} for i, f in examples],
           "op": "predict", "task": task}
    if ablate:
      req["ablate_heads"] = ablate
    labels = {"sst2": ("0", "1"), "rte": ("not_entailment", "entailment"),
              "qnli": ("not_entailment", "entailment")}[task]
    preds = []
    for i, f in examples:
      s = lexicon_score(f)
      preds.append({"confidence": logistic(abs(s)), "id": i,
                    "label": labels[1] if s > 0 else labels[0]})
    requests.append(req)
    responses.append({"op": "predict", "predictions": preds})

  predict("sst2", [("a", ["A great and moving film."])])
  predict("sst2", [("b", ["Dull, tedious and bland."]),
                   ("c", ["Neither here nor there."]),
                   ("d", ["Good acting but a terrible, awful script."])])
  predict("sst2", [("e", ["Brilliant brilliant brilliant!"])], ablate=[[0, 1], [3, 2]])
  predict("rte", [("r1", ["The best plan won.", "A good plan won."])])
  predict("qnli", [("q1", ["Was the café “good”?",
                           "Critics called it superb."])])
  predict("sst2", [("f", ["It was FINE, really fine."]),
                   ("g", ["What a mess."])])
  write(os.path.join(GOLDEN, "protocol_requests.jsonl"),
        "".join(dumps(r) + "\n" for r in requests))
  write(os.path.join(GOLDEN, "protocol_responses.jsonl"),
        "".join(dumps(r) + "\n" for r in responses))

  bad = [
      "not json",
      "[1,2,3]",
      dumps({"op": "fly"}),
      dumps({"op": "predict", "task": "sst2"}),
      dumps({"op": "predict", "task": "nosuchtask", "examples": []}),
      dumps({"examples": [{"fields": ["   "], "id": "x"}], "op": "predict",
             "task": "sst2"}),
      dumps({"examples": [{"fields": ["ok then"], "id": "x"}], "op": "predict",
             "task": "sst2", "ablate_heads": [[1]]}),
      dumps({"examples": [{"fields": ["one two three"], "id": "x"}],
             "op": "attend", "task": "sst2"}),
  ]
  write(os.path.join(GOLDEN, "protocol_bad_requests.jsonl"),
        "".join(b + "\n" for b in bad))


def make_attn_golden():
  tokens = ["[CLS]", "red", "fox", "[SEP]", "fox", "##es", "[SEP]"]
  segs = [0, 0, 0, 0, 1, 1, 1]
  special = [True, False, False, True, False, False, True]
  L, H, t = 1, 2, len(tokens)
  weights = []
  for h in range(H):
    for q in range(t):
      row = [0.0] * t
      if h == 0:
        row[(q + 1) % t] = 0.5
        row[q] = 0.25
        row[(q + 3) % t] = 0.25
      else:
        row[t - 1 - q] = 0.875
        row[0] += 0.125
      weights.extend(row)
  meta = {"id": "tiny", "segment_ids": segs, "special": special,
          "tokens": tokens}
  blob = b"ATTN1" + struct.pack("<III", L, H, t)
  blob += b"".join(struct.pack("<f", w) for w in weights)
  blob += dumps(meta).encode("utf-8")
  write(os.path.join(GOLDEN, "tiny.attn"), blob, binary=True)
  attn = []
  k = 0
  for _ in range(L):
    layer = []
    for _ in range(H):
      rows = []
      for _ in range(t):
        rows.append(weights[k:k + t])
        k += t
      layer.append(rows)
    attn.append(layer)
  inline = dict(meta, layers=L, heads=H, attn=attn)
  write(os.path.join(GOLDEN, "tiny_inline.json"), dumps(inline) + "\n")


def main():
  write(os.path.join(DATA, "split_cases.tsv"),
        "".join(f"{n}\t{t.replace(chr(10), chr(92) + 'n').replace(chr(9), chr(92) + 't')}\n"
                for n, t in SPLIT_CASES))
  make_sst2(random.Random(20240101))
  make_pair_task(random.Random(11), "rte", ("not_entailment", "entailment"),
                 (131, 146), (72, 127), "entailment",
                 "index\tsentence1\tsentence2\tlabel")
  make_pair_task(random.Random(12), "mrpc", ("0", "1"), (129, 279), (101, 255),
                 None, "id\tsentence1\tsentence2\tlabel")
  make_synth_source(random.Random(13))
  make_apollo(random.Random(14))
  make_protocol_golden()
  make_attn_golden()


if __name__ == "__main__":
  main()
