#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "sentqa/corpus.hpp"
#include "sentqa/error.hpp"
#include "sentqa/text_analysis.hpp"
#include "test_support.hpp"

using namespace sentqa;
using sentqa::testing::TempDir;

namespace {

Document doc(std::string body, std::string id = "d1") {
    Document d;
    d.doc_id = std::move(id);
    d.title = "T";
    d.body = std::move(body);
    return d;
}

std::vector<std::string> texts(const std::vector<SentenceSpan>& spans) {
    std::vector<std::string> out;
    for (const auto& s : spans) out.push_back(s.text);
    return out;
}

// Gaps between spans and around them must be whitespace only.
void expect_coverage(const std::string& text, const std::vector<SentenceSpan>& spans) {
    std::size_t cursor = 0;
    for (const auto& s : spans) {
        ASSERT_LE(cursor, s.char_start);
        for (std::size_t i = cursor; i < s.char_start; ++i) EXPECT_TRUE(text::is_space(text[i])) << text;
        EXPECT_EQ(text.substr(s.char_start, s.char_end - s.char_start), s.text);
        EXPECT_LT(s.char_start, s.char_end);
        EXPECT_FALSE(text::is_space(s.text.front()));
        EXPECT_FALSE(text::is_space(s.text.back()));
        cursor = s.char_end;
    }
    for (std::size_t i = cursor; i < text.size(); ++i) EXPECT_TRUE(text::is_space(text[i])) << text;
}

}  // namespace

TEST(SplitSentences, TwoShortSentences) {
    const auto spans = split_sentences("A cat. B dog.");
    ASSERT_EQ(spans.size(), 2u);
    EXPECT_EQ(spans[0], (SentenceSpan{"A cat.", 0, 6}));
    EXPECT_EQ(spans[1], (SentenceSpan{"B dog.", 7, 13}));
}

TEST(SplitSentences, Empty) {
    EXPECT_TRUE(split_sentences("").empty());
    EXPECT_TRUE(split_sentences("   \n ").empty());
}

TEST(SplitSentences, NoTerminalPunctuation) {
    const auto spans = split_sentences("No terminal punctuation");
    ASSERT_EQ(spans.size(), 1u);
    EXPECT_EQ(spans[0], (SentenceSpan{"No terminal punctuation", 0, 23}));
}

TEST(SplitSentences, AbbreviationsDoNotSplit) {
    const auto spans = split_sentences(
        "Results follow Smith et al. In prior work. See Fig. 3 for details. We use e.g. Adam here. It works.");
    EXPECT_EQ(texts(spans), (std::vector<std::string>{"Results follow Smith et al. In prior work.",
                                                      "See Fig. 3 for details.", "We use e.g. Adam here.",
                                                      "It works."}));
}

TEST(SplitSentences, LowercaseContinuationDoesNotSplit) {
    EXPECT_EQ(split_sentences("The value is 3. and more text follows. Done now.").size(), 2u);
}

TEST(SplitSentences, ParenthesesProtectCitations) {
    const auto spans = split_sentences("This holds (see Lee. Also Kim.) in general. Next one.");
    EXPECT_EQ(texts(spans), (std::vector<std::string>{"This holds (see Lee. Also Kim.) in general.", "Next one."}));
}

TEST(SplitSentences, UnbalancedBracketResetsAtBlankLine) {
    const auto spans = split_sentences("Broken (paren here. Still same.\n\nNew paragraph starts. Last.");
    ASSERT_GE(spans.size(), 2u);
    EXPECT_EQ(spans.back().text, "Last.");
}

TEST(SplitSentences, QuestionsExclamationsAndQuotes) {
    const auto spans = split_sentences("Is it good? Yes! He said \"stop.\" Then left.");
    EXPECT_EQ(texts(spans), (std::vector<std::string>{"Is it good?", "Yes!", "He said \"stop.\"", "Then left."}));
}

TEST(SplitSentences, OpeningQuoteBeforeCapital) {
    const auto spans = split_sentences("First one here. \"Quoted start\" here.");
    EXPECT_EQ(spans.size(), 2u);
}

TEST(SplitSentences, EllipsisAbsorbed) {
    const auto spans = split_sentences("Wait... Then go.");
    EXPECT_EQ(texts(spans), (std::vector<std::string>{"Wait...", "Then go."}));
}

TEST(SplitSentences, CoverageOnRandomText) {
    std::mt19937_64 rng(3);
    const std::vector<std::string> pieces = {"The", "cat", "Fig.", "et al.", "(x.", ")", "A.", "b?", "C!",
                                             "\n\n", "  ", "é", "\"Q.\"", "e.g.", "Done."};
    std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1);
    for (int trial = 0; trial < 300; ++trial) {
        std::string text;
        for (int i = 0; i < 25; ++i) {
            text += pieces[pick(rng)];
            text += ' ';
        }
        expect_coverage(text, split_sentences(text));
    }
}

TEST(BuildFrames, WindowOneMiddleFrameHasBothNeighbours) {
    const auto frames = build_frames(doc("First sentence here. Second sentence here. Third sentence here."), 1);
    ASSERT_EQ(frames.size(), 3u);
    EXPECT_EQ(frames[1].context_before, "First sentence here.");
    EXPECT_EQ(frames[1].context_after, "Third sentence here.");
    EXPECT_EQ(frames[0].context_before, "");
    EXPECT_EQ(frames[2].context_after, "");
}

TEST(BuildFrames, SingleSentenceHasEmptyContext) {
    const auto frames = build_frames(doc("Only one sentence lives here."), 2);
    ASSERT_EQ(frames.size(), 1u);
    EXPECT_EQ(frames[0].context_before, "");
    EXPECT_EQ(frames[0].context_after, "");
    EXPECT_EQ(frames[0].frame_id, "d1#1");
}

TEST(BuildFrames, FourthFrameSeesSentencesTwoAndThree) {
    const auto frames = build_frames(
        doc("Sentence one is here. Sentence two is here. Sentence three is here. Sentence four is here. "
            "Sentence five is here."),
        2);
    ASSERT_EQ(frames.size(), 5u);
    EXPECT_EQ(frames[3].frame_id, "d1#4");
    EXPECT_EQ(frames[3].context_before, "Sentence two is here. Sentence three is here.");
    EXPECT_EQ(frames[3].context_after, "Sentence five is here.");
}

TEST(BuildFrames, WindowZero) {
    const auto frames = build_frames(doc("One two three. Four five six."), 0);
    ASSERT_EQ(frames.size(), 2u);
    EXPECT_TRUE(frames[0].context_after.empty());
}

TEST(BuildFrames, ShortSentencesMergeForward) {
    const auto frames = build_frames(doc("Yes. The model works well today. Indeed so."), 2);
    ASSERT_EQ(frames.size(), 1u);
    EXPECT_EQ(frames[0].answer, "Yes. The model works well today. Indeed so.");

    const auto two = build_frames(doc("Hi. Encoders map text well. Decoders emit tokens quickly."), 2);
    ASSERT_EQ(two.size(), 2u);
    EXPECT_EQ(two[0].answer, "Hi. Encoders map text well.");
}

TEST(BuildFrames, RejectsEmptyBody) {
    EXPECT_THROW(build_frames(doc(""), 2), InvalidInputError);
    EXPECT_THROW(build_frames(doc(" \n\t"), 2), InvalidInputError);
}

TEST(BuildFrames, OffsetFidelityAndOrderOnRandomDocuments) {
    std::mt19937_64 rng(11);
    const std::vector<std::string> words = {"alpha", "Beta", "gamma.", "Delta!", "eps?", "(zeta", "eta)",
                                            "Fig.", "théta", "Iota.", "\n\n", "kappa", "the", "of"};
    std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
    for (int trial = 0; trial < 200; ++trial) {
        std::string body = "Start here now.";
        for (int i = 0; i < 40; ++i) body += " " + words[pick(rng)];
        const auto d = doc(body, "doc" + std::to_string(trial));
        const auto frames = build_frames(d, 2);
        ASSERT_FALSE(frames.empty());
        for (std::size_t i = 0; i < frames.size(); ++i) {
            const auto& f = frames[i];
            EXPECT_EQ(d.body.substr(f.char_start, f.char_end - f.char_start), f.answer);
            EXPECT_LT(f.char_start, f.char_end);
            EXPECT_EQ(f.frame_id, d.doc_id + "#" + std::to_string(i + 1));
            if (i > 0) EXPECT_LT(frames[i - 1].char_start, f.char_start);
        }
        EXPECT_EQ(build_frames(d, 2), frames);
    }
}

TEST(CorpusFile, RoundTrip) {
    std::mt19937_64 rng(1);
    auto frames = sentqa::testing::random_frames(rng, 100);
    frames[3].answer = "Unicode ✓ and \"quotes\"\n";
    frames[3].char_end = frames[3].answer.size();
    TempDir dir;
    save_corpus(frames, dir / "c.jsonl");
    EXPECT_EQ(load_corpus(dir / "c.jsonl"), frames);

    std::ostringstream a, b;
    write_corpus(a, frames);
    write_corpus(b, load_corpus(dir / "c.jsonl"));
    EXPECT_EQ(a.str(), b.str());
}

TEST(CorpusFile, FieldOrderIsStable) {
    std::ostringstream out;
    const std::vector<Frame> one{sentqa::testing::make_frame("x#1", "An answer.")};
    write_corpus(out, one);
    EXPECT_EQ(out.str(),
              "{\"frame_id\":\"x#1\",\"doc_id\":\"d\",\"answer\":\"An answer.\",\"context_before\":\"\","
              "\"context_after\":\"\",\"questions\":[],\"char_start\":0,\"char_end\":10}\n");
}

TEST(CorpusFile, DuplicateIdNamesTheId) {
    std::ostringstream out;
    const std::vector<Frame> frames{sentqa::testing::make_frame("x#1", "One."),
                                    sentqa::testing::make_frame("x#1", "Two.")};
    write_corpus(out, frames);
    std::istringstream in(out.str());
    try {
        read_corpus(in);
        FAIL() << "expected DuplicateIdError";
    } catch (const DuplicateIdError& e) {
        EXPECT_EQ(e.id(), "x#1");
    }
}

TEST(CorpusFile, MissingAnswerReportsLine) {
    std::istringstream in(
        "{\"frame_id\":\"a\",\"doc_id\":\"d\",\"answer\":\"x\",\"context_before\":\"\",\"context_after\":\"\","
        "\"questions\":[],\"char_start\":0,\"char_end\":1}\n"
        "{\"frame_id\":\"b\",\"doc_id\":\"d\",\"context_before\":\"\",\"context_after\":\"\","
        "\"questions\":[],\"char_start\":0,\"char_end\":1}\n");
    try {
        read_corpus(in);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
        EXPECT_NE(std::string(e.what()).find("answer"), std::string::npos);
    }
}

TEST(CorpusFile, RejectsBadRecords) {
    const auto parse = [](const std::string& s) {
        std::istringstream in(s);
        return read_corpus(in);
    };
    EXPECT_THROW(parse("not json\n"), ParseError);
    EXPECT_THROW(parse("[1,2]\n"), ParseError);
    EXPECT_THROW(parse("{\"frame_id\":\"a\",\"doc_id\":\"d\",\"answer\":\"x\",\"context_before\":\"\","
                       "\"context_after\":\"\",\"questions\":[\"\"],\"char_start\":0,\"char_end\":1}\n"),
                 ParseError);
    EXPECT_THROW(parse("{\"frame_id\":\"a\",\"doc_id\":\"d\",\"answer\":\"x\",\"context_before\":\"\","
                       "\"context_after\":\"\",\"questions\":[],\"char_start\":3,\"char_end\":1}\n"),
                 ParseError);
    EXPECT_TRUE(parse("\n\n").empty());
}

TEST(DocumentFile, RoundTripAndValidation) {
    std::vector<Document> docs{doc("Body one.", "a"), doc("Body two.", "b")};
    docs[0].meta["year"] = "2020";
    TempDir dir;
    save_documents(docs, dir / "d.jsonl");
    EXPECT_EQ(load_documents(dir / "d.jsonl"), docs);

    std::istringstream dup("{\"doc_id\":\"a\",\"title\":\"\",\"body\":\"x\"}\n{\"doc_id\":\"a\",\"title\":\"\",\"body\":\"y\"}\n");
    EXPECT_THROW(read_documents(dup), DuplicateIdError);
    std::istringstream empty_body("{\"doc_id\":\"a\",\"title\":\"\",\"body\":\"\"}\n");
    EXPECT_THROW(read_documents(empty_body), ParseError);
    EXPECT_THROW(load_documents(dir / "missing.jsonl"), Error);
}
