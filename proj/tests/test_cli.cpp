// Copyright 2026 The asrkit Authors
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


#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "asrkit/audio.hpp"
#include "asrkit/corpus.hpp"
#include "asrkit/ctc.hpp"
#include "asrkit/lm.hpp"
#include "cli.hpp"
#include "oracles.hpp"

using namespace asrkit;
namespace fs = std::filesystem;

namespace {

struct Captured {
  int rc;
  std::string out;
};

// Runs the tool with stdout captured; stderr is left alone.
Captured call(std::vector<std::string> args) {
  args.insert(args.begin(), "asrkit");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream sink;
  auto* old = std::cout.rdbuf(sink.rdbuf());
  int rc = 0;
  try {
    rc = cli::run(static_cast<int>(argv.size()), argv.data());
  } catch (...) {
    std::cout.rdbuf(old);
    throw;
  }
  std::cout.rdbuf(old);
  return {rc, sink.str()};
}

int rc_of(std::vector<std::string> args) { return call(std::move(args)).rc; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string l;
  while (std::getline(in, l)) out.push_back(l);
  return out;
}

// Peaked lattice spelling `text`, with a blank frame between every symbol.
ctc::LogProbLattice spelled(const std::string& text, const ctc::Vocabulary& v) {
  std::vector<int> path;
  for (char c : text) {
    path.push_back(c == ' ' ? v.delimiter() : *v.index(std::string(1, c)));
    path.push_back(v.blank());
  }
  Matrix logits = Matrix::Zero(static_cast<Eigen::Index>(path.size()), static_cast<Eigen::Index>(v.size()));
  for (std::size_t t = 0; t < path.size(); ++t) logits(static_cast<Eigen::Index>(t), path[t]) = 8.0;
  return ctc::lattice_from_logits(logits, v);
}

corpus::Utterance utt(const std::string& id, const std::string& text, const std::string& dataset = "sid") {
  corpus::Utterance u;
  u.id = id;
  u.audio_path = "/nowhere/" + id + ".wav";
  u.duration_sec = 1.0;
  u.speaker_id = "s_" + id;
  u.text = text;
  u.dataset = dataset;
  u.subset = corpus::Subset::Test;
  return u;
}

}  // namespace

TEST_CASE("usage errors exit 1") {
  CHECK(rc_of({}) == cli::kExitUsage);
  CHECK(rc_of({"no-such-command"}) == cli::kExitUsage);
  CHECK(rc_of({"normalize", "--bogus"}) == cli::kExitUsage);
  CHECK(rc_of({"estimate-lm", "--corpus", "x.txt"}) == cli::kExitUsage);  // --out missing
  CHECK(rc_of({"estimate-lm", "--corpus", "x.txt", "--out", "y", "--order", "7"}) == cli::kExitUsage);
  CHECK(rc_of({"perplexity", "--lm", "/definitely/missing.arpa", "--corpus", "c"}) == cli::kExitUsage);
}

TEST_CASE("help documents defaults") {
  const auto r = call({"decode", "--help"});
  CHECK(r.rc == cli::kExitOk);
  CHECK(r.out.find("--width") != std::string::npos);
  CHECK(r.out.find("100") != std::string::npos);
  CHECK(r.out.find("-0.3") != std::string::npos);
  const auto t = call({"train-toy", "--help"});
  CHECK(t.rc == cli::kExitOk);
  CHECK(t.out.find("--freeze-updates") != std::string::npos);
  CHECK(t.out.find("42") != std::string::npos);
  for (const char* sub : {"manifest", "split", "augment-cv", "filter-leakage", "summarize", "normalize", "estimate-lm",
                          "perplexity", "evaluate", "tune-fusion"}) {
    CHECK_MESSAGE(call({sub, "--help"}).rc == cli::kExitOk, sub);
  }
}

TEST_CASE("normalize, estimate-lm and perplexity chain") {
  oracle::TempDir dir("cli_lm");
  write_text(dir / "raw.txt", "Olá, Mundo!\nTenho 21 anos.\n\nolá mundo\n");
  REQUIRE(rc_of({"normalize", "--in", (dir / "raw.txt").string(), "--out", (dir / "norm.txt").string()}) == 0);
  auto norm = lines(slurp(dir / "norm.txt"));
  REQUIRE(!norm.empty());
  CHECK(norm[0].rfind("# asrkit", 0) == 0);
  while (!norm.empty() && norm.front().rfind("#", 0) == 0) norm.erase(norm.begin());
  norm.insert(norm.begin(), "");
  REQUIRE(norm.size() == 5);
  CHECK(norm[1] == "olá mundo");
  CHECK(norm[2] == "tenho vinte e um anos");
  CHECK(norm[3].empty());
  CHECK(norm[4] == "olá mundo");

  const auto arpa = (dir / "m.arpa").string();
  REQUIRE(rc_of({"estimate-lm", "--corpus", (dir / "norm.txt").string(), "--order", "2", "--out", arpa}) == 0);
  const auto model = lm::load_arpa(arpa);
  CHECK(model.order() == 2);
  CHECK(model.find("vinte").has_value());
  CHECK(slurp(arpa).rfind("# asrkit", 0) == 0);

  const auto r = call({"perplexity", "--lm", arpa, "--corpus", (dir / "norm.txt").string()});
  REQUIRE(r.rc == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j.at("sentences") == 3);
  CHECK(j.at("events") == 3 + 6 + 3);
  const std::vector<textnorm::TokenSequence> sents = {
      {"olá", "mundo"}, {"tenho", "vinte", "e", "um", "anos"}, {"olá", "mundo"}};
  CHECK(j.at("perplexity").get<double>() == doctest::Approx(lm::perplexity(model, sents)).epsilon(1e-12));
  CHECK(j.at("_meta").at("seed") == 42);

  // Byte-identical output for an identical invocation.
  const auto first = slurp(arpa);
  REQUIRE(rc_of({"estimate-lm", "--corpus", (dir / "norm.txt").string(), "--order", "2", "--out", arpa}) == 0);
  CHECK(slurp(arpa) == first);
}

TEST_CASE("data errors exit 2") {
  oracle::TempDir dir("cli_err");
  write_text(dir / "bad.arpa", "this is not an arpa file\n");
  write_text(dir / "c.txt", "a b\n");
  CHECK(rc_of({"perplexity", "--lm", (dir / "bad.arpa").string(), "--corpus", (dir / "c.txt").string()}) ==
        cli::kExitData);
  CHECK(rc_of({"estimate-lm", "--corpus", (dir / "missing.txt").string(), "--out", (dir / "o.arpa").string()}) ==
        cli::kExitData);
  write_text(dir / "empty.txt", "\n#only a comment\n");
  CHECK(rc_of({"estimate-lm", "--corpus", (dir / "empty.txt").string(), "--out", (dir / "o.arpa").string()}) ==
        cli::kExitData);
  write_text(dir / "bad.jsonl", "{\"id\": \"x\"\n");
  CHECK(rc_of({"split", "--in", (dir / "bad.jsonl").string(), "--train-out", (dir / "a").string(), "--test-out",
               (dir / "b").string()}) == cli::kExitData);
}

TEST_CASE("manifest, split, filter-leakage, augment-cv and summarize") {
  oracle::TempDir dir("cli_corpus");
  audio::AudioClip clip;
  clip.samples.assign(16000, 0.05);
  for (int s = 0; s < 6; ++s) {
    for (int k = 0; k < 2; ++k) {
      const auto base = dir / "root" / ("spk" + std::to_string(s)) / ("u" + std::to_string(k));
      fs::create_directories(base.parent_path());
      audio::save_wav(base.string() + ".wav", clip);
      write_text(base.string() + ".txt", "frase " + std::to_string(s) + " numero " + std::to_string(k));
    }
  }
  write_text(dir / "root" / "speakers.tsv", "spk0\tM\nspk1\tM\nspk2\tM\nspk3\tF\nspk4\tF\nspk5\tF\n");
  audio::AudioClip long_clip;
  long_clip.samples.assign(16000 * 3, 0.05);
  audio::save_wav(dir / "root" / "spk5" / "long.wav", long_clip);
  write_text(dir / "root" / "spk5" / "long.txt", "longa");

  const auto man = (dir / "all.jsonl").string();
  REQUIRE(rc_of({"manifest", "--root", (dir / "root").string(), "--dataset", "sid", "--max-seconds", "2", "--out",
                 man, "--report", (dir / "report.json").string()}) == 0);
  const auto m = corpus::load_manifest(man);
  CHECK(m.size() == 12);
  const auto report = nlohmann::json::parse(slurp(dir / "report.json"));
  CHECK(report.at("dropped").at("too_long") == 1);
  CHECK(rc_of({"manifest", "--root", (dir / "root").string(), "--dataset", "sid", "--format", "csv", "--out", man}) ==
        cli::kExitUsage);

  const auto train = (dir / "train.jsonl").string();
  const auto test = (dir / "test.jsonl").string();
  REQUIRE(rc_of({"split", "--in", man, "--male-frac", "0.5", "--female-frac", "0.4", "--seed", "7", "--train-out",
                 train, "--test-out", test}) == 0);
  const auto tr = corpus::load_manifest(train);
  const auto te = corpus::load_manifest(test);
  CHECK(tr.size() + te.size() == 12);
  CHECK(te.size() == 2 * (2 + 2));  // ceil(1.5) males, ceil(1.2) females, two utterances each
  for (const auto& a : tr.utterances) {
    for (const auto& b : te.utterances) CHECK(a.speaker_id != b.speaker_id);
  }
  const auto train_bytes = slurp(train);
  REQUIRE(rc_of({"split", "--in", man, "--male-frac", "0.5", "--female-frac", "0.4", "--seed", "7", "--train-out",
                 train, "--test-out", test}) == 0);
  CHECK(slurp(train) == train_bytes);

  // Plant a leaked sentence in the training side.
  corpus::Manifest leaky = tr;
  auto leaked = leaky.utterances.front();
  leaked.id = "leak";
  leaked.text = "FRASE " + te.utterances.front().text.substr(6) + "!";
  leaky.utterances.push_back(leaked);
  leaky.sort();
  corpus::save_manifest(dir / "leaky.jsonl", leaky);
  const auto filtered = (dir / "filtered.jsonl").string();
  REQUIRE(rc_of({"filter-leakage", "--train", (dir / "leaky.jsonl").string(), "--test", test, "--out", filtered}) == 0);
  CHECK(corpus::load_manifest(filtered).size() == tr.size());

  const auto aug = (dir / "aug.jsonl").string();
  REQUIRE(rc_of({"augment-cv", "--validated", man, "--dev", test, "--test", test, "--out", aug}) == 0);
  CHECK(corpus::load_manifest(aug).size() == tr.size());

  const auto r = call({"summarize", "--in", train, "--in", test});
  REQUIRE(r.rc == 0);
  const auto s = nlohmann::json::parse(r.out);
  CHECK(s.at("total").at("train").get<double>() == doctest::Approx(4.0 / 3600.0).epsilon(1e-9));
  CHECK(s.at("total").at("test").get<double>() == doctest::Approx(8.0 / 3600.0).epsilon(1e-9));
}

TEST_CASE("decode lattices, evaluate and tune-fusion") {
  oracle::TempDir dir("cli_decode");
  const auto v = ctc::Vocabulary::portuguese();
  ctc::save_vocabulary(dir / "vocab.txt", v);
  fs::create_directories(dir / "lat" / "sid");
  fs::create_directories(dir / "lat" / "tedx");
  ctc::save_lattice(dir / "lat" / "sid" / "u1.lat", spelled("ola mundo", v));
  ctc::save_lattice(dir / "lat" / "tedx" / "u2.lat", spelled("bom dia", v));

  const auto hyps = (dir / "hyps.jsonl").string();
  REQUIRE(rc_of({"decode", "--lattices", (dir / "lat").string(), "--vocab", (dir / "vocab.txt").string(), "--width",
                 "8", "--out", hyps}) == 0);
  auto rows = lines(slurp(hyps));
  REQUIRE(rows.size() == 3);
  CHECK(is_meta_line(rows[0]));
  CHECK(nlohmann::json::parse(rows[1]).at("id") == "sid/u1");
  CHECK(nlohmann::json::parse(rows[1]).at("text") == "ola mundo");
  CHECK(nlohmann::json::parse(rows[2]).at("text") == "bom dia");

  const auto greedy = call({"decode", "--lattices", (dir / "lat").string(), "--vocab", (dir / "vocab.txt").string(),
                            "--greedy"});
  REQUIRE(greedy.rc == 0);
  CHECK(lines(greedy.out).at(2).find("bom dia") != std::string::npos);

  // --lattices without --vocab, and both sources at once, are usage errors.
  CHECK(rc_of({"decode", "--lattices", (dir / "lat").string()}) == cli::kExitUsage);

  write_text(dir / "lm.txt", "ola mundo\nbom dia\nbom dia mundo\n");
  REQUIRE(rc_of({"estimate-lm", "--corpus", (dir / "lm.txt").string(), "--order", "2", "--out",
                 (dir / "lm.arpa").string()}) == 0);
  const auto fused = call({"decode", "--lattices", (dir / "lat").string(), "--vocab", (dir / "vocab.txt").string(),
                           "--lm", (dir / "lm.arpa").string(), "--alpha", "2.0", "--beta", "-0.3", "--width", "100"});
  REQUIRE(fused.rc == 0);
  CHECK(lines(fused.out).at(1).find("ola mundo") != std::string::npos);

  corpus::Manifest refs;
  refs.utterances = {utt("sid/u1", "olá mundo", "sid"), utt("tedx/u2", "bom dia", "tedx")};
  refs.sort();
  corpus::save_manifest(dir / "refs.jsonl", refs);
  const auto ev = call({"evaluate", "--refs", (dir / "refs.jsonl").string(), "--hyps", hyps, "--by-subset"});
  REQUIRE(ev.rc == 0);
  const auto report = nlohmann::json::parse(ev.out);
  CHECK(report.contains("_meta"));
  // "ola" vs "olá" is one substitution out of two words; tedx is perfect.
  CHECK(ev.out.find("0.5") != std::string::npos);
  CHECK(ev.out.find("0.25") != std::string::npos);

  corpus::Manifest partial;
  partial.utterances = {utt("sid/u1", "ola mundo")};
  corpus::save_manifest(dir / "partial.jsonl", partial);
  const auto tune = call({"tune-fusion", "--lattices", (dir / "lat").string(), "--vocab", (dir / "vocab.txt").string(),
                          "--refs", (dir / "partial.jsonl").string(), "--lm", (dir / "lm.arpa").string(), "--alphas",
                          "0,1", "--betas", "0,0.5"});
  CHECK(tune.rc == cli::kExitData);  // tedx/u2 has no reference

  corpus::Manifest fixed;
  fixed.utterances = {utt("sid/u1", "ola mundo"), utt("tedx/u2", "bom dia")};
  fixed.sort();
  corpus::save_manifest(dir / "fixed.jsonl", fixed);
  const auto tuned = call({"tune-fusion", "--lattices", (dir / "lat").string(), "--vocab",
                           (dir / "vocab.txt").string(), "--refs", (dir / "fixed.jsonl").string(), "--lm",
                           (dir / "lm.arpa").string(), "--alphas", "0,1", "--betas", "0,0.5"});
  REQUIRE(tuned.rc == 0);
  const auto j = nlohmann::json::parse(tuned.out);
  CHECK(j.at("grid").size() == 4);
  CHECK(j.at("grid")[1].at("alpha") == 0.0);
  CHECK(j.at("grid")[1].at("beta") == 0.5);
  CHECK(j.at("best").at("wer") == 0.0);
  CHECK(rc_of({"tune-fusion", "--lattices", (dir / "lat").string(), "--vocab", (dir / "vocab.txt").string(), "--lm",
               (dir / "lm.arpa").string(), "--alphas", "1,x"}) == cli::kExitUsage);
  CHECK(rc_of({"tune-fusion", "--lattices", (dir / "lat").string(), "--vocab", (dir / "vocab.txt").string(), "--lm",
               (dir / "lm.arpa").string(), "--alphas", "-1"}) == cli::kExitUsage);
}

TEST_CASE("train-toy writes a checkpoint that decode can load") {
  oracle::TempDir dir("cli_train");
  corpus::Manifest m;
  for (int i = 0; i < 2; ++i) {
    audio::AudioClip clip;
    clip.samples.resize(8000);
    for (std::size_t n = 0; n < clip.samples.size(); ++n) {
      clip.samples[n] = 0.3 * std::sin(2.0 * 3.14159265358979 * (300.0 + 400.0 * i) * static_cast<double>(n) / 16000.0);
    }
    const auto wav = dir / ("c" + std::to_string(i) + ".wav");
    audio::save_wav(wav, clip);
    auto u = utt("toy/c" + std::to_string(i), i == 0 ? "a" : "e", "toy");
    u.audio_path = wav.string();
    u.duration_sec = 0.5;
    u.subset = corpus::Subset::Train;
    m.utterances.push_back(u);
  }
  m.sort();
  const auto man = (dir / "m.jsonl").string();
  corpus::save_manifest(man, m);
  const auto ckpt = (dir / "toy.ckpt").string();
  REQUIRE(rc_of({"train-toy", "--train", man, "--valid", man, "--out", ckpt, "--log", (dir / "log.jsonl").string(),
                 "--max-updates", "2", "--eval-every", "1", "--accumulation-steps", "1", "--freeze-updates", "1"}) == 0);
  const auto log = lines(slurp(dir / "log.jsonl"));
  CHECK(is_meta_line(log.at(0)));
  CHECK(log.size() >= 3);

  const auto r = call({"decode", "--model", ckpt, "--manifest", man, "--greedy", "--lattices-out",
                       (dir / "lat").string()});
  REQUIRE(r.rc == 0);
  CHECK(lines(r.out).size() == 3);
  CHECK(fs::exists(dir / "lat" / "toy" / "c0.lat"));
  CHECK(fs::exists(dir / "lat" / "vocab.txt"));
  CHECK(rc_of({"decode", "--model", man, "--manifest", man}) == cli::kExitData);
}
