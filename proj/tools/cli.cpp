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

#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "asrkit/audio.hpp"
#include "asrkit/corpus.hpp"
#include "asrkit/ctc.hpp"
#include "asrkit/error.hpp"
#include "asrkit/lm.hpp"
#include "asrkit/metrics.hpp"
#include "asrkit/parallel.hpp"
#include "asrkit/provenance.hpp"
#include "asrkit/textnorm.hpp"
#include "asrkit/toymodel.hpp"

namespace asrkit::cli {
namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr const char* kLatticeExt = ".lat";

// Writes `text` to `path`, or to stdout for "-".
void write_output(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write " + path);
  out << text;
}

std::string read_input(const std::string& path) {
  std::ostringstream ss;
  if (path == "-") {
    ss << std::cin.rdbuf();
  } else {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot open " + path);
    ss << in.rdbuf();
  }
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

// Normalized sentences of a text corpus; "#" lines are provenance comments.
std::vector<textnorm::TokenSequence> read_corpus(const std::string& path) {
  std::vector<textnorm::TokenSequence> corpus;
  for (const auto& line : lines_of(read_input(path))) {
    if (!line.empty() && line.front() == '#') continue;
    auto tokens = textnorm::normalize(line);
    if (!tokens.empty()) corpus.push_back(std::move(tokens));
  }
  return corpus;
}

std::string comment_block(const OutputHeader& header) {
  std::string out;
  for (const auto& l : header.comment_lines()) out += l + "\n";
  return out;
}

std::vector<double> parse_grid(const std::string& text, const char* name) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw CLI::ValidationError(name, "'" + item + "' is not a number");
    }
  }
  if (out.empty()) throw CLI::ValidationError(name, "grid is empty");
  return out;
}

struct NamedLattices {
  std::vector<std::string> ids;
  std::vector<ctc::LogProbLattice> lattices;
};

NamedLattices read_lattice_dir(const fs::path& dir, const ctc::Vocabulary& vocab) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == kLatticeExt) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  NamedLattices out;
  for (const auto& f : files) {
    auto rel = fs::relative(f, dir);
    rel.replace_extension();
    out.ids.push_back(rel.generic_string());
    out.lattices.push_back(ctc::load_lattice(f, vocab));
  }
  return out;
}

NamedLattices model_lattices(const toymodel::ModelParams& p, const corpus::Manifest& m, int threads) {
  NamedLattices out;
  out.ids.resize(m.size());
  out.lattices.assign(m.size(), ctc::LogProbLattice{Matrix(), p.vocab});
  const auto examples = toymodel::load_examples(m);
  parallel_for(m.size(), threads, [&](std::size_t i) {
    out.ids[i] = m.utterances[i].id;
    out.lattices[i] = toymodel::infer(p, examples[i].clip);
  });
  return out;
}

std::map<std::string, std::string> read_hyps(const std::string& path) {
  std::map<std::string, std::string> out;
  std::size_t n = 0;
  for (const auto& line : lines_of(read_input(path))) {
    ++n;
    if (line.find_first_not_of(" \t") == std::string::npos || is_meta_line(line)) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out[j.at("id").get<std::string>()] = j.at("text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::MalformedManifest, path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

class Tool {
 public:
  explicit Tool(std::string command) { header_.command = std::move(command); }

  void setup(CLI::App& app) {
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);
    app.option_defaults()->always_capture_default();
    add_manifest(app);
    add_split(app);
    add_augment(app);
    add_filter(app);
    add_summarize(app);
    add_normalize(app);
    add_estimate(app);
    add_perplexity(app);
    add_train(app);
    add_decode(app);
    add_evaluate(app);
    add_tune(app);
  }

  void execute() { action_(); }

 private:
  OutputHeader header(std::initializer_list<std::string> inputs, std::uint64_t seed = 42) {
    OutputHeader h = header_;
    h.seed = seed;
    for (const auto& in : inputs) {
      if (!in.empty() && in != "-") h.add_input(in);
    }
    return h;
  }

  void add_manifest(CLI::App& app) {
    auto* sub = app.add_subcommand("manifest", "Build an utterance manifest from an audio+transcript tree");
    sub->add_option("--root", m_.root, "Corpus root directory")->required()->check(CLI::ExistingDirectory);
    sub->add_option("--dataset", m_.dataset, "Dataset tag (cetuc, cv, laps, mls, sid, tedx, voxforge, ...)")
        ->required();
    sub->add_option("--format", m_.format, "Transcript layout")
        ->check(CLI::IsMember({"one-file-per-audio", "tsv-index", "jsonl-index"}));
    sub->add_option("--subset", m_.subset, "Subset tag for every utterance")
        ->check(CLI::IsMember({"train", "valid", "test"}));
    sub->add_option("--max-seconds", m_.max_seconds, "Drop utterances longer than this")
        ->check(CLI::PositiveNumber);
    sub->add_option("--out", m_.out, "Manifest JSONL output")->required();
    sub->add_option("--report", m_.report, "Split report JSON output");
    sub->callback([this] {
      action_ = [this] {
        auto built = corpus::build_manifest(m_.root, m_.dataset, corpus::parse_transcript_format(m_.format));
        const auto subset = corpus::parse_subset(m_.subset);
        for (auto& u : built.manifest.utterances) u.subset = subset;
        corpus::DroppedCounts dropped;
        dropped.missing_audio = built.missing_audio.size() + built.unreadable_audio.size();
        auto [non_empty, empty] = corpus::drop_empty(std::move(built.manifest));
        dropped.empty_text = empty + built.missing_transcript.size();
        auto [kept, too_long] = corpus::drop_too_long(std::move(non_empty), m_.max_seconds);
        dropped.too_long = too_long;
        for (const auto& p : built.missing_transcript) std::cerr << "missing transcript: " << p << "\n";
        for (const auto& p : built.missing_audio) std::cerr << "missing audio: " << p << "\n";
        for (const auto& p : built.unreadable_audio) std::cerr << "unreadable audio: " << p << "\n";
        const auto h = header({m_.root}, 42);
        corpus::save_manifest(m_.out, kept, &h);
        const corpus::Manifest one[] = {kept};
        const auto report = corpus::summarize(one, dropped);
        std::cerr << report.to_table();
        if (!m_.report.empty()) write_output(m_.report, report.to_json() + "\n");
      };
    });
  }

  void add_split(CLI::App& app) {
    auto* sub = app.add_subcommand("split", "Speaker-disjoint test split");
    sub->add_option("--in", s_.in, "Input manifest")->required()->check(CLI::ExistingFile);
    sub->add_option("--male-frac", s_.male, "Fraction of male speakers moved to test")->check(CLI::Range(0.0, 1.0));
    sub->add_option("--female-frac", s_.female, "Fraction of female speakers moved to test")
        ->check(CLI::Range(0.0, 1.0));
    sub->add_option("--seed", s_.seed, "Shuffle seed");
    sub->add_option("--train-out", s_.train_out, "Remaining training manifest")->required();
    sub->add_option("--test-out", s_.test_out, "Test manifest")->required();
    sub->callback([this] {
      action_ = [this] {
        const auto m = corpus::load_manifest(s_.in);
        const auto split = corpus::split_by_speaker(m, s_.male, s_.female, s_.seed);
        const auto h = header({s_.in}, s_.seed);
        corpus::save_manifest(s_.train_out, split.train, &h);
        corpus::save_manifest(s_.test_out, split.test, &h);
        std::cerr << "train " << split.train.size() << " utterances, test " << split.test.size() << "\n";
      };
    });
  }

  void add_augment(CLI::App& app) {
    auto* sub = app.add_subcommand("augment-cv", "Validated utterances avoiding dev/test speakers and sentences");
    sub->add_option("--validated", a_.validated, "Validated manifest")->required()->check(CLI::ExistingFile);
    sub->add_option("--dev", a_.dev, "Dev manifest")->required()->check(CLI::ExistingFile);
    sub->add_option("--test", a_.test, "Test manifest")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", a_.out, "Augmented training manifest")->required();
    sub->callback([this] {
      action_ = [this] {
        const auto out = corpus::augment_common_voice(corpus::load_manifest(a_.validated),
                                                      corpus::load_manifest(a_.dev), corpus::load_manifest(a_.test));
        const auto h = header({a_.validated, a_.dev, a_.test});
        corpus::save_manifest(a_.out, out, &h);
        std::cerr << "kept " << out.size() << " utterances\n";
      };
    });
  }

  void add_filter(CLI::App& app) {
    auto* sub = app.add_subcommand("filter-leakage", "Drop training sentences present in any test set");
    sub->add_option("--train", f_.train, "Training manifest")->required()->check(CLI::ExistingFile);
    sub->add_option("--test", f_.tests, "Test manifest (repeatable)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", f_.out, "Filtered training manifest")->required();
    sub->callback([this] {
      action_ = [this] {
        std::vector<corpus::Manifest> tests;
        for (const auto& t : f_.tests) tests.push_back(corpus::load_manifest(t));
        auto [out, removed] = corpus::filter_test_leakage(corpus::load_manifest(f_.train), tests);
        OutputHeader h = header({f_.train});
        for (const auto& t : f_.tests) h.add_input(t);
        corpus::save_manifest(f_.out, out, &h);
        std::cerr << "removed " << removed << " leaked utterances\n";
      };
    });
  }

  void add_summarize(CLI::App& app) {
    auto* sub = app.add_subcommand("summarize", "Hours per dataset and subset");
    sub->add_option("--in", sum_.inputs, "Manifest (repeatable)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", sum_.out, "Report JSON output");
    sub->callback([this] {
      action_ = [this] {
        std::vector<corpus::Manifest> ms;
        for (const auto& p : sum_.inputs) ms.push_back(corpus::load_manifest(p));
        const auto report = corpus::summarize(ms);
        std::cerr << report.to_table();
        write_output(sum_.out, report.to_json() + "\n");
      };
    });
  }

  void add_normalize(CLI::App& app) {
    auto* sub = app.add_subcommand("normalize", "Normalize text lines for training targets and LM corpora");
    sub->add_option("--in", n_.in, "UTF-8 text input, - for stdin");
    sub->add_option("--out", n_.out, "Normalized text output, - for stdout");
    sub->callback([this] {
      action_ = [this] {
        std::string out = comment_block(header({n_.in}));
        textnorm::NormalizeStats stats;
        for (const auto& line : lines_of(read_input(n_.in))) {
          out += textnorm::join(textnorm::normalize(line, &stats));
          out += '\n';
        }
        write_output(n_.out, out);
        std::cerr << "dropped symbols: " << stats.dropped_symbols << "\n";
      };
    });
  }

  void add_estimate(CLI::App& app) {
    auto* sub = app.add_subcommand("estimate-lm", "Estimate a Witten-Bell n-gram model in ARPA format");
    sub->add_option("--corpus", e_.corpus, "Text corpus, one sentence per line")->required();
    sub->add_option("--order", e_.order, "N-gram order")->check(CLI::Range(1, 5));
    sub->add_option("--out", e_.out, "ARPA output")->required();
    sub->callback([this] {
      action_ = [this] {
        const auto corpus = read_corpus(e_.corpus);
        const auto model = lm::estimate_ngram(corpus, e_.order);
        const auto preamble = header({e_.corpus}).comment_lines();
        lm::save_arpa(e_.out, model, preamble);
        std::cerr << "estimated order-" << e_.order << " model from " << corpus.size() << " sentences\n";
      };
    });
  }

  void add_perplexity(CLI::App& app) {
    auto* sub = app.add_subcommand("perplexity", "Perplexity of an ARPA model on a text corpus");
    sub->add_option("--lm", p_.lm, "ARPA model")->required()->check(CLI::ExistingFile);
    sub->add_option("--corpus", p_.corpus, "Text corpus")->required();
    sub->add_option("--out", p_.out, "JSON output, - for stdout");
    sub->callback([this] {
      action_ = [this] {
        const auto model = lm::load_arpa(p_.lm);
        const auto corpus = read_corpus(p_.corpus);
        std::size_t events = 0;
        for (const auto& s : corpus) events += s.size() + 1;
        json j;
        j["_meta"] = json::parse(header({p_.lm, p_.corpus}).json_line())["_meta"];
        j["sentences"] = corpus.size();
        j["events"] = events;
        j["perplexity"] = lm::perplexity(model, corpus);
        write_output(p_.out, j.dump() + "\n");
      };
    });
  }

  void add_train(CLI::App& app) {
    auto* sub = app.add_subcommand("train-toy", "Fine-tune the toy acoustic model with CTC");
    sub->add_option("--train", t_.train, "Training manifest")->required()->check(CLI::ExistingFile);
    sub->add_option("--valid", t_.valid, "Validation manifest")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", t_.out, "Checkpoint output (best by validation WER)")->required();
    sub->add_option("--log", t_.log, "Training log JSONL output");
    sub->add_option("--init", t_.init, "Start from this checkpoint instead of a fresh model")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", t_.seed, "Seed for initialization, shuffling and masks");
    sub->add_option("--lr", t_.opt.lr, "Adam learning rate")->check(CLI::NonNegativeNumber);
    sub->add_option("--freeze-updates", t_.opt.freeze_updates, "Updates with the context network frozen")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--accumulation-steps", t_.opt.accumulation_steps, "Micro-batches per update")
        ->check(CLI::PositiveNumber);
    sub->add_option("--max-updates", t_.opt.max_updates, "Optimizer updates")->check(CLI::NonNegativeNumber);
    sub->add_option("--eval-every", t_.opt.eval_every, "Updates between validation passes")
        ->check(CLI::PositiveNumber);
    sub->add_option("--max-samples-per-batch", t_.opt.max_samples_per_batch, "Audio samples per micro-batch")
        ->check(CLI::PositiveNumber);
    sub->add_option("--mask-time-prob", t_.opt.masks.time_mask_prob, "Probability a frame starts a time mask")
        ->check(CLI::Range(0.0, 1.0));
    sub->add_option("--mask-time-len", t_.opt.masks.time_mask_len, "Time mask span")->check(CLI::PositiveNumber);
    sub->add_option("--mask-channel-prob", t_.opt.masks.channel_mask_prob,
                    "Probability a channel starts a channel mask")
        ->check(CLI::Range(0.0, 1.0));
    sub->add_option("--mask-channel-len", t_.opt.masks.channel_mask_len, "Channel mask span")
        ->check(CLI::PositiveNumber);
    sub->add_option("--pretrain-updates", t_.pretrain_updates, "Contrastive updates before fine-tuning")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--pretrain-lr", t_.pretrain_lr, "Adam learning rate for contrastive updates")
        ->check(CLI::NonNegativeNumber);
    sub->callback([this] {
      action_ = [this] {
        t_.opt.seed = t_.seed;
        const auto train = toymodel::load_examples(corpus::load_manifest(t_.train));
        const auto valid = toymodel::load_examples(corpus::load_manifest(t_.valid));
        auto params = t_.init.empty() ? toymodel::ModelParams::init({}, {}, ctc::Vocabulary::portuguese(), t_.seed)
                                      : toymodel::load_checkpoint(t_.init);
        if (t_.pretrain_updates > 0) {
          params = toymodel::pretrain(params, train, toymodel::PretrainOptions{}, t_.pretrain_lr,
                                      t_.pretrain_updates, t_.seed)
                       .params;
        }
        auto result = toymodel::finetune(params, train, valid, t_.opt, [](const toymodel::LogEntry& e) {
          if (e.update % 100 == 0) std::cerr << "update " << e.update << " loss " << e.loss << "\n";
        });
        toymodel::save_checkpoint(t_.out, result.best);
        if (!t_.log.empty()) {
          write_output(t_.log, header({t_.train, t_.valid}, t_.seed).json_line() + "\n" +
                                   toymodel::format_log(result.log));
        }
        std::cerr << "best update " << result.best_update << " validation WER " << result.best_wer;
        if (result.skipped) std::cerr << " (skipped " << result.skipped << " utterances too short for their text)";
        std::cerr << "\n";
      };
    });
  }

  struct Source {
    std::string lattices, vocab, model, manifest;
  };

  void add_source(CLI::App* sub, Source& src) {
    auto* lat = sub->add_option("--lattices", src.lattices, "Directory of *.lat lattices")
                    ->check(CLI::ExistingDirectory);
    auto* voc = sub->add_option("--vocab", src.vocab, "Vocabulary file for --lattices")->check(CLI::ExistingFile);
    auto* mod = sub->add_option("--model", src.model, "Toy model checkpoint")->check(CLI::ExistingFile);
    auto* man = sub->add_option("--manifest", src.manifest, "Manifest decoded with --model")
                    ->check(CLI::ExistingFile);
    lat->needs(voc);
    voc->needs(lat);
    mod->needs(man);
    man->needs(mod);
    lat->excludes(mod);
    mod->excludes(lat);
  }

  NamedLattices load_source(const Source& src, int threads) {
    if (!src.lattices.empty()) return read_lattice_dir(src.lattices, ctc::load_vocabulary(src.vocab));
    if (!src.model.empty()) {
      return model_lattices(toymodel::load_checkpoint(src.model), corpus::load_manifest(src.manifest), threads);
    }
    throw CLI::RequiredError("--lattices or --model");
  }

  void add_decode(CLI::App& app) {
    auto* sub = app.add_subcommand("decode", "Decode lattices or audio to transcripts");
    add_source(sub, d_.src);
    sub->add_option("--lm", d_.lm, "ARPA model for shallow fusion")->check(CLI::ExistingFile);
    sub->add_option("--alpha", d_.beam.alpha, "LM weight")->check(CLI::NonNegativeNumber);
    sub->add_option("--beta", d_.beam.beta, "Word insertion bonus");
    sub->add_option("--width", d_.beam.width, "Beam width")->check(CLI::PositiveNumber);
    sub->add_flag("--greedy", d_.greedy, "Best-path decoding instead of beam search");
    sub->add_option("--lattices-out", d_.lattices_out, "Also write model lattices to this directory");
    sub->add_option("--out", d_.out, "Transcript JSONL output, - for stdout");
    sub->callback([this] {
      action_ = [this] {
        const int threads = thread_count_from_env();
        const auto named = load_source(d_.src, threads);
        std::optional<lm::NgramModel> model;
        if (!d_.lm.empty()) model = lm::load_arpa(d_.lm);
        std::vector<ctc::LabelSequence> best;
        if (d_.greedy) {
          best.resize(named.lattices.size());
          parallel_for(best.size(), threads, [&](std::size_t i) { best[i] = ctc::greedy_decode(named.lattices[i]); });
        } else {
          best = ctc::decode_all(named.lattices, d_.beam, model ? &*model : nullptr, threads);
        }
        if (!d_.lattices_out.empty()) {
          for (std::size_t i = 0; i < named.ids.size(); ++i) {
            const fs::path p = fs::path(d_.lattices_out) / (named.ids[i] + kLatticeExt);
            fs::create_directories(p.parent_path());
            ctc::save_lattice(p, named.lattices[i]);
          }
          ctc::save_vocabulary(fs::path(d_.lattices_out) / "vocab.txt", named.lattices.empty()
                                                                           ? ctc::Vocabulary::portuguese()
                                                                           : named.lattices.front().vocab);
        }
        OutputHeader h = header({d_.src.lattices, d_.src.vocab, d_.src.model, d_.src.manifest, d_.lm});
        std::string out = h.json_line() + "\n";
        for (std::size_t i = 0; i < best.size(); ++i) {
          json row;
          row["id"] = named.ids[i];
          row["text"] = named.lattices[i].vocab.text(best[i]);
          out += row.dump() + "\n";
        }
        write_output(d_.out, out);
        std::cerr << "decoded " << best.size() << " utterances\n";
      };
    });
  }

  void add_evaluate(CLI::App& app) {
    auto* sub = app.add_subcommand("evaluate", "WER/CER of hypotheses against a reference manifest");
    sub->add_option("--refs", ev_.refs, "Reference manifest")->required()->check(CLI::ExistingFile);
    sub->add_option("--hyps", ev_.hyps, "Hypothesis JSONL with id and text")->required()->check(CLI::ExistingFile);
    sub->add_flag("--by-subset", ev_.by_subset, "Score each dataset tag separately and macro-average");
    sub->add_option("--out", ev_.out, "Report JSON output, - for stdout");
    sub->callback([this] {
      action_ = [this] {
        const auto refs = corpus::load_manifest(ev_.refs);
        const auto hyps = read_hyps(ev_.hyps);
        std::vector<metrics::ScoredPair> pairs;
        std::size_t missing = 0;
        for (const auto& u : refs.utterances) {
          const auto it = hyps.find(u.id);
          if (it == hyps.end()) ++missing;
          pairs.push_back({ev_.by_subset ? u.dataset : std::string("all"), u.text,
                           it == hyps.end() ? std::string() : it->second});
        }
        if (missing) std::cerr << missing << " references have no hypothesis; scored as empty\n";
        const auto report = metrics::evaluate(pairs);
        auto j = json::parse(metrics::report_to_json(report));
        json out;
        out["_meta"] = json::parse(header({ev_.refs, ev_.hyps}).json_line())["_meta"];
        for (auto& [k, v] : j.items()) out[k] = v;
        write_output(ev_.out, out.dump(2) + "\n");
        std::cerr << metrics::report_to_table(report);
      };
    });
  }

  void add_tune(CLI::App& app) {
    auto* sub = app.add_subcommand("tune-fusion", "Grid search for the LM weight and word bonus");
    add_source(sub, tu_.src);
    sub->add_option("--refs", tu_.refs, "Reference manifest (defaults to --manifest)")->check(CLI::ExistingFile);
    sub->add_option("--lm", tu_.lm, "ARPA model")->required()->check(CLI::ExistingFile);
    sub->add_option("--alphas", tu_.alphas, "Comma-separated LM weights");
    sub->add_option("--betas", tu_.betas, "Comma-separated word bonuses");
    sub->add_option("--width", tu_.width, "Beam width")->check(CLI::PositiveNumber);
    sub->add_option("--out", tu_.out, "Search result JSON, - for stdout");
    sub->callback([this] {
      const auto alphas = parse_grid(tu_.alphas, "--alphas");
      const auto betas = parse_grid(tu_.betas, "--betas");
      if (std::any_of(alphas.begin(), alphas.end(), [](double a) { return a < 0.0; })) {
        throw CLI::ValidationError("--alphas", "LM weights must be >= 0");
      }
      action_ = [this, alphas, betas] {
        const int threads = thread_count_from_env();
        const auto named = load_source(tu_.src, threads);
        const std::string refs_path = tu_.refs.empty() ? tu_.src.manifest : tu_.refs;
        if (refs_path.empty()) throw Error(Errc::InvalidArgument, "--refs is required with --lattices");
        const auto refs = corpus::load_manifest(refs_path);
        std::map<std::string, std::string> by_id;
        for (const auto& u : refs.utterances) by_id[u.id] = u.text;
        std::vector<textnorm::TokenSequence> ref_tokens;
        for (const auto& id : named.ids) {
          const auto it = by_id.find(id);
          if (it == by_id.end()) throw Error(Errc::MalformedManifest, "no reference for lattice " + id);
          ref_tokens.push_back(textnorm::normalize(it->second));
        }
        const auto model = lm::load_arpa(tu_.lm);
        const auto search = ctc::tune_fusion(named.lattices, ref_tokens, model, alphas, betas, tu_.width, threads);
        json out;
        out["_meta"] = json::parse(header({tu_.src.lattices, tu_.src.model, refs_path, tu_.lm}).json_line())["_meta"];
        out["best"] = {{"alpha", search.best.alpha}, {"beta", search.best.beta}, {"wer", search.best.wer}};
        json grid = json::array();
        for (const auto& p : search.grid) grid.push_back({{"alpha", p.alpha}, {"beta", p.beta}, {"wer", p.wer}});
        out["grid"] = grid;
        write_output(tu_.out, out.dump(2) + "\n");
        std::cerr << "best alpha " << search.best.alpha << " beta " << search.best.beta << " WER " << search.best.wer
                  << "\n";
      };
    });
  }

  OutputHeader header_;
  std::function<void()> action_;

  struct {
    std::string root, dataset, format = "one-file-per-audio", subset = "train", out, report;
    double max_seconds = audio::kDefaultMaxSeconds;
  } m_;
  struct {
    std::string in, train_out, test_out;
    double male = 0.05, female = 0.05;
    std::uint64_t seed = 42;
  } s_;
  struct {
    std::string validated, dev, test, out;
  } a_;
  struct {
    std::string train, out;
    std::vector<std::string> tests;
  } f_;
  struct {
    std::vector<std::string> inputs;
    std::string out = "-";
  } sum_;
  struct {
    std::string in = "-", out = "-";
  } n_;
  struct {
    std::string corpus, out;
    int order = 3;
  } e_;
  struct {
    std::string lm, corpus, out = "-";
  } p_;
  struct {
    std::string train, valid, out, log, init;
    std::uint64_t seed = 42;
    toymodel::FinetuneOptions opt;
    long pretrain_updates = 0;
    double pretrain_lr = 1e-4;
  } t_;
  struct {
    Source src;
    std::string lm, lattices_out, out = "-";
    ctc::BeamOptions beam;
    bool greedy = false;
  } d_;
  struct {
    std::string refs, hyps, out = "-";
    bool by_subset = false;
  } ev_;
  struct {
    Source src;
    std::string refs, lm, alphas = "0,0.5,1,1.5,2,3", betas = "-1,-0.5,0,0.5,1", out = "-";
    int width = 100;
  } tu_;
};

}  // namespace

int run(int argc, const char* const* argv) {
  std::string command = "asrkit";
  for (int i = 1; i < argc; ++i) command += std::string(" ") + argv[i];
  CLI::App app{"asrkit: speech recognition pipeline toolkit", "asrkit"};
  Tool tool(command);
  tool.setup(app);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }
  try {
    tool.execute();
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << "asrkit: " << e.what() << "\n";
    return kExitData;
  } catch (const CLI::Error& e) {
    std::cerr << "asrkit: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "asrkit: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace asrkit::cli
