#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "aglm/checkpoint.hpp"
#include "aglm/hangul.hpp"
#include "aglm/model.hpp"
#include "aglm/predict.hpp"
#include "aglm/train.hpp"
#include "aglm/vocab.hpp"

namespace py = pybind11;
using namespace aglm;

namespace {

ModelConfig make_model_config(const std::string& embedding_mode, int syll_dim,
                              int morph_dim, int word_dim, const std::string& filters,
                              int highway_layers, bool coupled_carry, int hidden,
                              const std::string& bands, int max_syllables, int bptt) {
  ModelConfig c;
  c.embedding_mode = embedding_mode_from_string(embedding_mode);
  c.syll_emb_dim = syll_dim;
  c.morph_emb_dim = morph_dim;
  c.word_emb_dim = word_dim;
  c.filter_spec = parse_filter_spec(filters);
  c.highway_layers = highway_layers;
  c.coupled_carry = coupled_carry;
  c.lstm_hidden = hidden;
  c.band_spec = parse_band_spec(bands);
  c.max_syllables = max_syllables;
  c.bptt_len = bptt;
  return c;
}

TrainConfig make_train_config(int epochs, int batch_size, double lr, double lr_decay,
                              int decay_after, double clip_norm, uint64_t seed,
                              double validation_fraction) {
  TrainConfig t;
  t.epochs = epochs;
  t.batch_size = batch_size;
  t.lr = lr;
  t.lr_decay = lr_decay;
  t.decay_after = decay_after;
  t.clip_norm = clip_norm;
  t.seed = seed;
  t.validation_fraction = validation_fraction;
  return t;
}

}  // namespace

PYBIND11_MODULE(_aglm, m) {
  m.doc() = "Korean agglutinative neural language model core";

  py::register_exception<CheckpointException>(m, "CheckpointError");

  // ---- Hangul utilities
  m.def("normalize", [](const std::string& s) { return hangul::normalize(s); });
  m.def("split_words",
        [](const std::string& s) { return hangul::split_words(hangul::normalize(s)); });
  m.def("decompose", [](const std::string& syllable) {
    std::vector<hangul::Codepoint> cps = hangul::decode_utf8(syllable);
    if (cps.size() != 1) throw std::invalid_argument("expected a single syllable");
    hangul::JamoTriple t = hangul::decompose_jamo(cps[0]);
    return py::make_tuple(t.lead, t.vowel, t.tail);
  });
  m.def("compose", [](int lead, int vowel, int tail) {
    return hangul::encode_utf8(hangul::compose_jamo({lead, vowel, tail}));
  });
  m.def("jamo_keystrokes",
        [](const std::string& word) { return hangul::jamo_keystrokes(word); });

  // ---- corpus, lexicon, vocabularies
  py::class_<SegmenterLexicon>(m, "Lexicon")
      .def(py::init<>())
      .def(
          "add",
          [](SegmenterLexicon& lex, const std::string& morpheme, uint64_t freq) {
            lex.add(morpheme, freq);
          },
          py::arg("morpheme"), py::arg("freq") = 1)
      .def("annotate",
           [](SegmenterLexicon& lex, const std::string& word,
              std::vector<std::string> morphemes) {
             lex.annotate(word, std::move(morphemes));
           })
      .def("segment", [](const SegmenterLexicon& lex, const std::string& word) {
        return segment_morphemes(word, lex);
      });

  py::class_<Corpus>(m, "Corpus")
      .def_readonly("sentences", &Corpus::sentences)
      .def_readonly("word_count", &Corpus::word_count)
      .def_readonly("lexicon", &Corpus::lexicon);
  m.def("parse_corpus", &parse_corpus, py::arg("text"), py::arg("annotated") = false);
  m.def(
      "load_corpus",
      [](const std::string& path, bool annotated) { return load_corpus(path, annotated); },
      py::arg("path"), py::arg("annotated") = false);

  py::class_<Vocabulary>(m, "Vocabulary")
      .def("__len__", &Vocabulary::size)
      .def("id_of", [](const Vocabulary& v, const std::string& s) { return v.id_of(s); })
      .def("surface_of", &Vocabulary::surface_of)
      .def("hash", &Vocabulary::hash);

  py::class_<VocabSet>(m, "VocabSet")
      .def_readonly("word", &VocabSet::word)
      .def_readonly("morph", &VocabSet::morph)
      .def_readonly("syllable", &VocabSet::syllable)
      .def_readonly("jamo", &VocabSet::jamo);
  m.def(
      "build_vocabs",
      [](const Corpus& corpus, const SegmenterLexicon& lexicon, size_t max_words,
         size_t max_morphs) {
        VocabBuildOptions opts;
        opts.max_words = max_words;
        opts.max_morphs = max_morphs;
        return build_vocab_set(corpus, lexicon, opts);
      },
      py::arg("corpus"), py::arg("lexicon"), py::arg("max_words") = 200000,
      py::arg("max_morphs") = 20000);

  // ---- configs, training, checkpoints
  py::class_<ModelConfig>(m, "ModelConfig")
      .def_property_readonly("input_width", &ModelConfig::input_width)
      .def("to_dict", &ModelConfig::to_map)
      .def("param_count", [](const ModelConfig& c) { return param_count(c); });
  m.def("make_model_config", &make_model_config, py::arg("embedding_mode") = "syl+morph",
        py::arg("syll_dim") = 15, py::arg("morph_dim") = 52, py::arg("word_dim") = 306,
        py::arg("filters") = "1x30,2x40,3x40,4x40", py::arg("highway_layers") = 1,
        py::arg("coupled_carry") = true, py::arg("hidden") = 500,
        py::arg("bands") = "5000:152,20000:52,rest:12", py::arg("max_syllables") = 8,
        py::arg("bptt") = 35);

  py::class_<TrainConfig>(m, "TrainConfig").def("to_dict", &TrainConfig::to_map);
  m.def("make_train_config", &make_train_config, py::arg("epochs") = 10,
        py::arg("batch_size") = 16, py::arg("lr") = 1.0, py::arg("lr_decay") = 0.5,
        py::arg("decay_after") = 4, py::arg("clip_norm") = 5.0, py::arg("seed") = 1,
        py::arg("validation_fraction") = 0.05);

  py::class_<Checkpoint>(m, "Checkpoint")
      .def("save", &save_checkpoint, py::arg("path"))
      .def_static("load", &load_checkpoint, py::arg("path"))
      .def_readonly("config", &Checkpoint::config)
      .def_property_readonly(
          "param_count", [](const Checkpoint& c) { return c.params.total_size(); })
      .def("serialize",
           [](const Checkpoint& c) { return py::bytes(serialize_checkpoint(c)); });

  py::class_<EpochMetrics>(m, "EpochMetrics")
      .def_readonly("epoch", &EpochMetrics::epoch)
      .def_readonly("train_nll", &EpochMetrics::train_nll)
      .def_readonly("valid_ppl", &EpochMetrics::valid_ppl);

  py::class_<TrainResult>(m, "TrainResult")
      .def_readonly("checkpoint", &TrainResult::checkpoint)
      .def_readonly("metrics", &TrainResult::metrics)
      .def_readonly("diverged", &TrainResult::diverged);

  m.def(
      "train",
      [](const Corpus& corpus, const VocabSet& vocabs, const SegmenterLexicon& lexicon,
         const ModelConfig& mc, const TrainConfig& tc) {
        return train(corpus, vocabs, lexicon, mc, tc);
      },
      py::arg("corpus"), py::arg("vocabs"), py::arg("lexicon"), py::arg("model_config"),
      py::arg("train_config"),
      py::call_guard<py::gil_scoped_release>());

  m.def(
      "perplexity",
      [](const Checkpoint& ckpt, const Corpus& corpus, const VocabSet& vocabs,
         const SegmenterLexicon& lexicon) {
        return perplexity(ckpt, corpus, vocabs, lexicon);
      },
      py::arg("checkpoint"), py::arg("corpus"), py::arg("vocabs"), py::arg("lexicon"),
      py::call_guard<py::gil_scoped_release>());

  m.def(
      "complete",
      [](const Checkpoint& ckpt, const VocabSet& vocabs, const SegmenterLexicon& lexicon,
         const std::vector<std::string>& context, const std::string& prefix, int n) {
        ModelPredictor predictor(ckpt, vocabs, lexicon);
        predictor.start_sentence();
        for (const std::string& w : context) predictor.commit_word(w);
        return predictor.suggest(prefix, n);
      },
      py::arg("checkpoint"), py::arg("vocabs"), py::arg("lexicon"), py::arg("context"),
      py::arg("prefix") = "", py::arg("n") = 3);

  m.def(
      "kss",
      [](const Checkpoint& ckpt, const Corpus& corpus, const VocabSet& vocabs,
         const SegmenterLexicon& lexicon, int n_suggestions, int selection_cost,
         bool count_separators) {
        KssOptions opts;
        opts.n_suggestions = n_suggestions;
        opts.selection_cost = selection_cost;
        opts.count_separators = count_separators;
        KssReport r = kss_evaluate(ckpt, corpus, vocabs, lexicon, opts);
        py::dict out;
        out["total"] = r.total;
        out["pressed"] = r.pressed;
        out["saved"] = r.saved;
        out["percent"] = r.kss_percent();
        return out;
      },
      py::arg("checkpoint"), py::arg("corpus"), py::arg("vocabs"), py::arg("lexicon"),
      py::arg("n_suggestions") = 3, py::arg("selection_cost") = 0,
      py::arg("count_separators") = true);
}
