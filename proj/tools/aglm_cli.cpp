// aglm: Korean syllable+morpheme language model trainer, evaluator and
// keyboard-prediction demo.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "aglm/checkpoint.hpp"
#include "aglm/hangul.hpp"
#include "aglm/model.hpp"
#include "aglm/predict.hpp"
#include "aglm/train.hpp"
#include "aglm/vocab.hpp"

namespace fs = std::filesystem;
using namespace aglm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

VocabSet load_vocab_set(const std::string& dir) {
  VocabSet set;
  set.word = Vocabulary::deserialize(read_file(dir + "/word.vocab"));
  set.morph = Vocabulary::deserialize(read_file(dir + "/morpheme.vocab"));
  set.syllable = Vocabulary::deserialize(read_file(dir + "/syllable.vocab"));
  set.jamo = Vocabulary::deserialize(read_file(dir + "/jamo.vocab"));
  return set;
}

SegmenterLexicon load_lexicon_file(const std::string& path) {
  return SegmenterLexicon::deserialize(read_file(path));
}

SegmenterLexicon load_dir_lexicon(const std::string& dir) {
  std::string path = dir + "/lexicon.tsv";
  if (!fs::exists(path)) return SegmenterLexicon{};
  return load_lexicon_file(path);
}

struct ModelFlags {
  std::string embedding_mode = "syl+morph";
  int syll_dim = 15;
  int morph_dim = 52;
  int word_dim = 306;
  std::string filters = "1x30,2x40,3x40,4x40";
  int highway_layers = 1;
  bool independent_carry = false;
  int hidden = 500;
  std::string bands = "5000:152,20000:52,rest:12";
  int max_syllables = 8;
  int bptt = 35;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--embedding-mode", embedding_mode,
                    "word|morph|char|syl|syl+morph")
        ->check(CLI::IsMember({"word", "morph", "char", "syl", "syl+morph"}));
    cmd->add_option("--syll-dim", syll_dim, "syllable embedding size");
    cmd->add_option("--morph-dim", morph_dim, "morpheme embedding size");
    cmd->add_option("--word-dim", word_dim, "word embedding size (word mode)");
    cmd->add_option("--filters", filters, "CNN filters, WIDTHxCOUNT list");
    cmd->add_option("--highway-layers", highway_layers);
    cmd->add_flag("--independent-carry", independent_carry,
                  "use an independent carry gate instead of C = 1 - T");
    cmd->add_option("--hidden", hidden, "LSTM units");
    cmd->add_option("--bands", bands, "softmax bands, SIZE:RANK list, last may be rest:RANK");
    cmd->add_option("--max-syllables", max_syllables);
    cmd->add_option("--bptt", bptt, "truncated BPTT window");
  }

  ModelConfig to_config() const {
    ModelConfig c;
    c.embedding_mode = embedding_mode_from_string(embedding_mode);
    c.syll_emb_dim = syll_dim;
    c.morph_emb_dim = morph_dim;
    c.word_emb_dim = word_dim;
    c.filter_spec = parse_filter_spec(filters);
    c.highway_layers = highway_layers;
    c.coupled_carry = !independent_carry;
    c.lstm_hidden = hidden;
    c.band_spec = parse_band_spec(bands);
    c.max_syllables = max_syllables;
    c.bptt_len = bptt;
    return c;
  }
};

int cmd_vocab(const std::string& corpus_path, bool annotated,
              const std::string& lexicon_path, const std::string& out_dir,
              const VocabBuildOptions& options) {
  Corpus corpus = load_corpus(corpus_path, annotated);
  SegmenterLexicon lexicon = corpus.lexicon;
  if (!lexicon_path.empty()) {
    SegmenterLexicon external = load_lexicon_file(lexicon_path);
    for (const auto& [m, f] : external.entries) lexicon.add(m, f);
  }
  VocabSet set = build_vocab_set(corpus, lexicon, options);
  fs::create_directories(out_dir);
  write_file(out_dir + "/word.vocab", set.word.serialize());
  write_file(out_dir + "/morpheme.vocab", set.morph.serialize());
  write_file(out_dir + "/syllable.vocab", set.syllable.serialize());
  write_file(out_dir + "/jamo.vocab", set.jamo.serialize());
  write_file(out_dir + "/lexicon.tsv", lexicon.serialize());

  size_t covered = 0;
  for (const auto& s : corpus.sentences) {
    for (const auto& w : s) {
      if (set.word.id_of(w) != Vocabulary::kUnk) ++covered;
    }
  }
  std::cout << "word vocab: " << set.word.size() << "\n"
            << "morpheme vocab: " << set.morph.size() << "\n"
            << "syllable vocab: " << set.syllable.size() << "\n"
            << "jamo vocab: " << set.jamo.size() << "\n";
  double coverage = corpus.word_count == 0
                        ? 0.0
                        : 100.0 * static_cast<double>(covered) /
                              static_cast<double>(corpus.word_count);
  std::cout << "word token coverage: " << std::fixed << std::setprecision(2)
            << coverage << "%\n";
  return kExitOk;
}

std::string resolved_config_header(const ModelConfig& mc, const TrainConfig& tc) {
  std::ostringstream out;
  for (const auto& [k, v] : mc.to_map()) out << "# model." << k << " = " << v << "\n";
  for (const auto& [k, v] : tc.to_map()) out << "# train." << k << " = " << v << "\n";
  return out.str();
}

int cmd_train(const std::string& corpus_path, bool annotated,
              const std::string& vocab_dir, const std::string& out_path,
              const ModelFlags& mf, const TrainConfig& tc, bool quiet) {
  ModelConfig mc = mf.to_config();
  Corpus corpus = load_corpus(corpus_path, annotated);
  VocabSet vocabs = load_vocab_set(vocab_dir);
  SegmenterLexicon lexicon = load_dir_lexicon(vocab_dir);
  TrainResult result =
      train(corpus, vocabs, lexicon, mc, tc, quiet ? nullptr : &std::cerr);
  save_checkpoint(result.checkpoint, out_path);
  write_file(out_path + ".metrics.tsv",
             resolved_config_header(result.checkpoint.config, tc) +
                 metrics_to_tsv(result.metrics));
  if (result.diverged) {
    std::cerr << "training diverged; wrote last good parameters\n";
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_eval_ppl(const std::string& ckpt_path, const std::string& corpus_path,
                 bool annotated, const std::string& vocab_dir) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  VocabSet vocabs = load_vocab_set(vocab_dir);
  SegmenterLexicon lexicon = load_dir_lexicon(vocab_dir);
  Corpus corpus = load_corpus(corpus_path, annotated);
  double ppl = perplexity(ckpt, corpus, vocabs, lexicon);
  std::cout << std::fixed << std::setprecision(2) << ppl << "\n";
  return kExitOk;
}

int cmd_eval_kss(const std::string& ckpt_path, const std::string& corpus_path,
                 const std::string& vocab_dir, const KssOptions& options,
                 const std::string& per_sentence_path) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  VocabSet vocabs = load_vocab_set(vocab_dir);
  SegmenterLexicon lexicon = load_dir_lexicon(vocab_dir);
  Corpus corpus = load_corpus(corpus_path, false);
  if (corpus.word_count == 0) throw std::runtime_error("KSS corpus is empty");
  KssReport report = kss_evaluate(ckpt, corpus, vocabs, lexicon, options);
  std::cout << "total keystrokes: " << report.total << "\n"
            << "pressed: " << report.pressed << "\n"
            << "saved: " << report.saved << "\n"
            << "KSS: " << std::fixed << std::setprecision(2) << report.kss_percent()
            << "\n";
  if (!per_sentence_path.empty()) {
    write_file(per_sentence_path, kss_per_sentence_tsv(report));
  }
  return kExitOk;
}

int cmd_predict(const std::string& ckpt_path, const std::string& vocab_dir,
                int n_suggestions) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  VocabSet vocabs = load_vocab_set(vocab_dir);
  SegmenterLexicon lexicon = load_dir_lexicon(vocab_dir);
  ModelPredictor predictor(ckpt, vocabs, lexicon);
  std::string line;
  while (std::getline(std::cin, line)) {
    bool ends_with_space = !line.empty() && (line.back() == ' ' || line.back() == '\t');
    std::vector<std::string> words = hangul::split_words(hangul::normalize(line));
    std::string prefix;
    if (!ends_with_space && !words.empty()) {
      prefix = words.back();
      words.pop_back();
    }
    predictor.start_sentence();
    for (const std::string& w : words) predictor.commit_word(w);
    std::vector<std::string> suggestions = predictor.suggest(prefix, n_suggestions);
    for (size_t i = 0; i < suggestions.size(); ++i) {
      if (i) std::cout << '\t';
      std::cout << suggestions[i];
    }
    std::cout << "\n";
  }
  return kExitOk;
}

int cmd_inspect(const std::string& ckpt_path) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  for (const auto& [k, v] : ckpt.config.to_map()) {
    std::cout << "model." << k << " = " << v << "\n";
  }
  for (const auto& [k, v] : ckpt.extra) std::cout << "run." << k << " = " << v << "\n";
  std::cout << "prng = " << ckpt.prng_id << "\n";
  std::vector<Band> bands =
      band_partition(static_cast<size_t>(ckpt.config.word_vocab), ckpt.config.band_spec);
  for (const Band& b : bands) {
    std::cout << "band [" << b.begin << "," << b.end << "): rank " << b.rank << "\n";
  }
  for (const auto& [name, t] : ckpt.params.tensors) {
    std::cout << name << " " << shape_to_string(t.shape) << " = " << t.size() << "\n";
  }
  std::cout << "dsoftmax parameters: " << dsoftmax_param_count(ckpt.config) << "\n"
            << "full softmax equivalent: " << full_softmax_param_count(ckpt.config)
            << "\n"
            << "total parameters: " << ckpt.params.total_size() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Korean agglutinative language model: training, perplexity, "
               "keystroke-savings evaluation and word prediction"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key = value config file; flags override");
  app.allow_config_extras(false);

  // vocab
  auto* vocab_cmd = app.add_subcommand("vocab", "build vocabulary files from a corpus");
  std::string corpus_path, lexicon_path, out_dir;
  bool annotated = false;
  VocabBuildOptions vocab_opts;
  vocab_cmd->add_option("--corpus", corpus_path, "corpus, one sentence per line")
      ->required();
  vocab_cmd->add_flag("--annotated", annotated, "corpus carries surface|m1+m2 annotations");
  vocab_cmd->add_option("--lexicon", lexicon_path, "extra morpheme lexicon (TSV)");
  vocab_cmd->add_option("--out-dir", out_dir, "output directory")->required();
  vocab_cmd->add_option("--max-words", vocab_opts.max_words);
  vocab_cmd->add_option("--max-morphs", vocab_opts.max_morphs);
  vocab_cmd->add_option("--max-sylls", vocab_opts.max_syllables);
  vocab_cmd->add_option("--max-jamo", vocab_opts.max_jamo);

  // train
  auto* train_cmd = app.add_subcommand("train", "train a model");
  std::string vocab_dir, ckpt_out;
  bool quiet = false;
  ModelFlags model_flags;
  TrainConfig train_config;
  train_cmd->add_option("--corpus", corpus_path, "training corpus")->required();
  train_cmd->add_flag("--annotated", annotated);
  train_cmd->add_option("--vocab-dir", vocab_dir)->required();
  train_cmd->add_option("--out", ckpt_out, "checkpoint output path")->required();
  model_flags.add_to(train_cmd);
  train_cmd->add_option("--epochs", train_config.epochs);
  train_cmd->add_option("--batch-size", train_config.batch_size);
  train_cmd->add_option("--lr", train_config.lr);
  train_cmd->add_option("--lr-decay", train_config.lr_decay);
  train_cmd->add_option("--decay-after", train_config.decay_after);
  train_cmd->add_option("--clip", train_config.clip_norm);
  train_cmd->add_option("--seed", train_config.seed);
  train_cmd->add_option("--valid-frac", train_config.validation_fraction);
  train_cmd->add_flag("--quiet", quiet);

  // eval-ppl
  auto* ppl_cmd = app.add_subcommand("eval-ppl", "corpus perplexity of a checkpoint");
  std::string ckpt_path;
  ppl_cmd->add_option("--checkpoint", ckpt_path)->required();
  ppl_cmd->add_option("--corpus", corpus_path)->required();
  ppl_cmd->add_flag("--annotated", annotated);
  ppl_cmd->add_option("--vocab-dir", vocab_dir)->required();

  // eval-kss
  auto* kss_cmd = app.add_subcommand("eval-kss", "keystroke savings simulation");
  KssOptions kss_options;
  std::string per_sentence_path;
  int count_separators = 1;
  kss_cmd->add_option("--checkpoint", ckpt_path)->required();
  kss_cmd->add_option("--corpus", corpus_path)->required();
  kss_cmd->add_option("--vocab-dir", vocab_dir)->required();
  kss_cmd->add_option("--suggestions", kss_options.n_suggestions);
  kss_cmd->add_option("--selection-cost", kss_options.selection_cost)
      ->check(CLI::Range(0, 1));
  kss_cmd->add_option("--count-separators", count_separators)->check(CLI::Range(0, 1));
  kss_cmd->add_option("--per-sentence", per_sentence_path, "per-sentence TSV output");

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "interactive completion REPL");
  int n_suggestions = 3;
  predict_cmd->add_option("--checkpoint", ckpt_path)->required();
  predict_cmd->add_option("--vocab-dir", vocab_dir)->required();
  predict_cmd->add_option("--suggestions", n_suggestions);

  // inspect
  auto* inspect_cmd = app.add_subcommand("inspect", "summarize a checkpoint");
  inspect_cmd->add_option("--checkpoint", ckpt_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (vocab_cmd->parsed()) {
      return cmd_vocab(corpus_path, annotated, lexicon_path, out_dir, vocab_opts);
    }
    if (train_cmd->parsed()) {
      return cmd_train(corpus_path, annotated, vocab_dir, ckpt_out, model_flags,
                       train_config, quiet);
    }
    if (ppl_cmd->parsed()) {
      return cmd_eval_ppl(ckpt_path, corpus_path, annotated, vocab_dir);
    }
    if (kss_cmd->parsed()) {
      kss_options.count_separators = count_separators != 0;
      return cmd_eval_kss(ckpt_path, corpus_path, vocab_dir, kss_options,
                          per_sentence_path);
    }
    if (predict_cmd->parsed()) {
      return cmd_predict(ckpt_path, vocab_dir, n_suggestions);
    }
    if (inspect_cmd->parsed()) {
      return cmd_inspect(ckpt_path);
    }
  } catch (const CheckpointException& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
