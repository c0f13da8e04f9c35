#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "doctest.h"

#include "scalesearch/core.hpp"
#include "scalesearch/rng.hpp"

#include "doubles.hpp"

using namespace scalesearch;

namespace {

// Independent reference: the splitmix64 generator as published by Steele,
// Lea and Flood (state += golden gamma; finalize).
struct RefSplitmix {
    std::uint64_t state;
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }
};

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("mix64 and derive_key match the splitmix64 reference") {
    // Known-answer vectors for splitmix64 seeded with 0.
    CHECK(derive_key(0, 0) == 0xE220A8397B1DCDAFull);
    CHECK(mix64(2 * 0x9E3779B97F4A7C15ull) == 0x6E789E6AA1B965F4ull);

    RefSplitmix ref{0x1234ABCDull};
    RngStream stream(0x1234ABCDull);
    for (int i = 0; i < 100; ++i) CHECK(stream.next_u64() == ref.next());

    // derive_key(key, salt) equals the (salt+1)-th reference output.
    RefSplitmix ref2{0x9999ull};
    for (std::uint64_t salt = 0; salt < 16; ++salt)
        CHECK(derive_key(0x9999ull, salt) == ref2.next());
}

TEST_CASE("RngStream draws are well formed and reproducible") {
    RngStream a(42), b(42);
    for (int i = 0; i < 1000; ++i) {
        const double u = a.next_double();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    for (int i = 0; i < 1000; ++i) {
        CHECK(b.next_double() >= 0.0);  // same draws as a, bounds only
    }

    RngStream c(7);
    for (int i = 0; i < 200; ++i) CHECK(c.below(10) < 10);
    for (int i = 0; i < 200; ++i) {
        const long long v = c.uniform_int(-3, 3);
        CHECK(v >= -3);
        CHECK(v <= 3);
    }
    CHECK(c.uniform_int(5, 5) == 5);

    RngStream d(9);
    for (int i = 0; i < 100; ++i) CHECK_FALSE(d.bernoulli(0.0));
    for (int i = 0; i < 100; ++i) CHECK(d.bernoulli(1.0));

    // Derivation depends on the key only, not on stream consumption.
    RngStream fresh(42);
    RngStream spent(42);
    spent.next_u64();
    spent.next_u64();
    CHECK(fresh.derive(5).next_u64() == spent.derive(5).next_u64());
    CHECK(fresh.derive(5).key() != fresh.derive(6).key());
}

TEST_CASE("normalize_answer trims, folds and canonicalizes") {
    CHECK(normalize_answer("  Apple  ") == "apple");
    CHECK(normalize_answer("YES!!") == "yes");
    CHECK(normalize_answer("b.") == "b");
    CHECK(normalize_answer("  (B)") == "(b");  // only trailing punctuation is stripped
    CHECK(normalize_answer("3.1400") == "3.14");
    CHECK(normalize_answer("007") == "7");
    CHECK(normalize_answer("+42") == "42");
    CHECK(normalize_answer("-0") == "0");
    CHECK(normalize_answer("0.50") == "0.5");
    CHECK(normalize_answer("12.") == "12");
    CHECK(normalize_answer(".5") == "0.5");
    CHECK(normalize_answer("-12.50") == "-12.5");
    CHECK(normalize_answer("0.000") == "0");
    CHECK(normalize_answer("1e3") == "1e3");  // not a plain decimal; left alone
    CHECK(normalize_answer("two words  ") == "two words");
    CHECK_THROWS_AS(normalize_answer("   "), EmptyAnswer);
    CHECK_THROWS_AS(normalize_answer("!!!"), EmptyAnswer);
}

TEST_CASE("extract_answer reads the final step only, last marker wins") {
    Chain chain;
    chain.problem_id = "p";
    CHECK_FALSE(extract_answer(chain).has_value());

    ThoughtStep s1;
    s1.text = "Final Answer: stale";
    ThoughtStep s2;
    s2.text = "No marker here.";
    chain.steps = {s1, s2};
    CHECK_FALSE(extract_answer(chain).has_value());  // marker not in the last step

    chain.steps.back().text = "Thinking... Final Answer: b";
    CHECK(extract_answer(chain) == "b");

    chain.steps.back().text = "Final Answer: first Final Answer: Second!";
    CHECK(extract_answer(chain) == "second");

    chain.steps.back().text = "final answer:   C  ";
    CHECK(extract_answer(chain) == "c");

    chain.steps.back().text = "Final Answer:   ";
    CHECK_FALSE(extract_answer(chain).has_value());

    chain.steps.back().text = "Custom Marker: d";
    CHECK(extract_answer(chain, "Custom Marker:") == "d");
}

TEST_CASE("token accounting sums prompt, completion and image costs") {
    ThoughtStep step;
    step.prompt_tokens = 3;
    step.completion_tokens = 17;
    step.produced_images.push_back(
        ImageRef::inline_image("h0", ToyImage::filled(2, 2, 9), 85, 0));
    CHECK(step.token_cost() == 105);

    Chain chain;
    chain.steps.push_back(step);
    ThoughtStep plain;
    plain.completion_tokens = 20;
    chain.steps.push_back(plain);
    CHECK(chain_tokens(chain) == 125);
}

TEST_CASE("chain_content_hash reacts to every content field") {
    const Chain base = doubles::make_finished_chain("p1", "a");
    CHECK(chain_content_hash(base) == chain_content_hash(base));

    Chain copy = base;
    CHECK(chain_content_hash(copy) == chain_content_hash(base));

    std::set<std::uint64_t> seen{chain_content_hash(base)};
    auto expect_new = [&](const Chain& chain) { CHECK(seen.insert(chain_content_hash(chain)).second); };

    Chain c = base;
    c.problem_id = "p2";
    expect_new(c);

    c = base;
    c.steps[0].text += " extra";
    expect_new(c);

    c = base;
    c.answer = "b";
    expect_new(c);

    c = base;
    c.finished = false;
    c.answer.reset();
    expect_new(c);

    c = base;
    c.truncated = true;
    expect_new(c);

    c = base;
    c.steps[0].completion_tokens += 1;
    expect_new(c);

    c = base;
    c.steps[0].modality = Modality::multi_modal;
    expect_new(c);

    c = base;
    c.steps[0].modality = Modality::multi_modal;
    c.steps[0].op = VisualOp::annotate(0, 0, 100);
    expect_new(c);

    Chain d = c;
    d.steps[0].op = VisualOp::annotate(0, 0, 101);  // arg change only
    expect_new(d);

    d = c;
    d.steps[0].exec_error = "boom";
    expect_new(d);

    d = c;
    d.steps[0].produced_images.push_back(
        ImageRef::inline_image("h", ToyImage::filled(1, 1, 5), 85, 0));
    expect_new(d);

    Chain e = d;
    e.steps[0].produced_images[0].matrix->cells[0] = 6;  // pixel change only
    expect_new(e);

    // Provenance is identity, not content: it must not affect the hash.
    c = base;
    c.provenance.sample_index = 99;
    c.provenance.seed = 123;
    CHECK(chain_content_hash(c) == chain_content_hash(base));
}

TEST_CASE("validate_chain enforces structural invariants") {
    Chain good = doubles::make_finished_chain("p1", "a");
    CHECK_NOTHROW(validate_chain(good));

    Chain bad = good;
    bad.answer.reset();  // finished without answer
    CHECK_THROWS_AS(validate_chain(bad), std::logic_error);

    bad = good;
    bad.finished = false;  // answer without finished
    CHECK_THROWS_AS(validate_chain(bad), std::logic_error);

    bad = good;
    bad.provenance.sample_index = -1;
    CHECK_THROWS_AS(validate_chain(bad), std::logic_error);

    bad = good;
    bad.steps[0].completion_tokens = -1;
    CHECK_THROWS_AS(validate_chain(bad), std::logic_error);

    // Produced images require an op and a multi-modal step.
    bad = good;
    bad.steps[0].produced_images.push_back(
        ImageRef::inline_image("h", ToyImage::filled(1, 1, 1), 0, 0));
    CHECK_THROWS_AS(validate_chain(bad), std::logic_error);

    Chain mm = good;
    mm.steps[0].modality = Modality::multi_modal;
    mm.steps[0].op = VisualOp::annotate(0, 0, 1);
    mm.steps[0].produced_images.push_back(
        ImageRef::inline_image("h", ToyImage::filled(1, 1, 1), 0, 0));
    CHECK_NOTHROW(validate_chain(mm));

    Chain mixed = mm;
    mixed.steps[0].exec_error = "boom";  // images and error together
    CHECK_THROWS_AS(validate_chain(mixed), std::logic_error);

    Chain origin = mm;
    origin.steps[0].produced_images[0].origin_step = 3;  // beyond the producing step
    CHECK_THROWS_AS(validate_chain(origin), std::logic_error);

    Chain text_op = good;
    text_op.steps[0].op = VisualOp::annotate(0, 0, 1);  // text-only step with op
    CHECK_THROWS_AS(validate_chain(text_op), std::logic_error);
}

TEST_CASE("toy images round-trip through JSON and files") {
    ToyImage img = ToyImage::filled(2, 3, 0);
    img.at(0, 0) = 255;
    img.at(1, 2) = 17;
    CHECK(img.valid());

    const std::string text = to_json_string(img);
    CHECK(toy_image_from_json(text) == img);

    const auto path = temp_path("scalesearch_img_test.json");
    {
        std::ofstream out(path);
        out << text;
    }
    CHECK(load_toy_image(path.string()) == img);
    std::filesystem::remove(path);

    CHECK_THROWS_AS(toy_image_from_json("not json"), ExecutionError);
    CHECK_THROWS_AS(toy_image_from_json(R"({"rows":2,"cols":2,"cells":[1,2,3]})"),
                    ExecutionError);
    CHECK_THROWS_AS(toy_image_from_json(R"({"rows":1,"cols":1,"cells":[300]})"),
                    ExecutionError);
    CHECK_THROWS_AS(toy_image_from_json(R"({"rows":1,"cols":1,"cells":[-1]})"),
                    ExecutionError);
    CHECK_THROWS_AS(load_toy_image("/nonexistent/image.json"), ExecutionError);
}

TEST_CASE("image refs expose their matrices") {
    ToyImage img = ToyImage::filled(2, 2, 7);
    const ImageRef inline_ref = ImageRef::inline_image("a", img, 85, 2);
    CHECK(inline_ref.source == ImageSource::inline_matrix);
    CHECK(inline_ref.token_cost == 85);
    CHECK(inline_ref.origin_step == 2);
    CHECK(image_matrix(inline_ref) == img);

    const auto path = temp_path("scalesearch_ref_test.json");
    {
        std::ofstream out(path);
        out << to_json_string(img);
    }
    const ImageRef file_ref = ImageRef::file("b", path.string());
    CHECK(image_matrix(file_ref) == img);
    std::filesystem::remove(path);

    ImageRef encoded;
    encoded.source = ImageSource::encoded;
    encoded.payload = "AAAA";
    CHECK_FALSE(image_matrix(encoded).has_value());
}
