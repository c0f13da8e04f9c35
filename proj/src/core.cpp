#include "scalesearch/core.hpp"

#include <cctype>
#include <cstring>
#include <regex>
#include <stdexcept>

namespace scalesearch {

ImageRef ImageRef::inline_image(std::string handle, ToyImage image, long long token_cost,
                                int origin_step) {
    ImageRef ref;
    ref.handle = std::move(handle);
    ref.source = ImageSource::inline_matrix;
    ref.matrix = std::move(image);
    ref.token_cost = token_cost;
    ref.origin_step = origin_step;
    return ref;
}

ImageRef ImageRef::file(std::string handle, std::string path) {
    ImageRef ref;
    ref.handle = std::move(handle);
    ref.source = ImageSource::file_path;
    ref.path = std::move(path);
    return ref;
}

std::optional<ToyImage> image_matrix(const ImageRef& ref) {
    switch (ref.source) {
        case ImageSource::inline_matrix:
            return ref.matrix;
        case ImageSource::file_path:
            return load_toy_image(ref.path);
        case ImageSource::encoded:
            return std::nullopt;
    }
    return std::nullopt;
}

long long ThoughtStep::token_cost() const {
    long long total = prompt_tokens + completion_tokens;
    for (const ImageRef& ref : produced_images) total += ref.token_cost;
    return total;
}

namespace {

bool is_ascii_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_ascii_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

// "12.50" -> "12.5", "+7" -> "7", "-0" -> "0". Leaves non-numeric text alone.
std::string canonicalize_numeric(const std::string& s) {
    static const std::regex numeric(R"(^([+-]?)(\d+)(\.(\d*))?$|^([+-]?)\.(\d+)$)");
    std::smatch m;
    if (!std::regex_match(s, m, numeric)) return s;

    std::string sign, intpart, fracpart;
    if (m[2].matched) {
        sign = m[1].str();
        intpart = m[2].str();
        fracpart = m[4].matched ? m[4].str() : std::string();
    } else {
        sign = m[5].str();
        intpart = "0";
        fracpart = m[6].str();
    }
    if (sign == "+") sign.clear();

    std::size_t first = intpart.find_first_not_of('0');
    intpart = first == std::string::npos ? "0" : intpart.substr(first);

    while (!fracpart.empty() && fracpart.back() == '0') fracpart.pop_back();

    std::string out = sign + intpart;
    if (!fracpart.empty()) out += "." + fracpart;
    if (out == "-0") out = "0";
    return out;
}

}  // namespace

std::string normalize_answer(const std::string& raw) {
    std::size_t begin = 0;
    std::size_t end = raw.size();
    while (begin < end && is_ascii_space(raw[begin])) ++begin;
    while (end > begin && is_ascii_space(raw[end - 1])) --end;
    std::string s = raw.substr(begin, end - begin);

    while (!s.empty() && (is_ascii_punct(s.back()) || is_ascii_space(s.back()))) s.pop_back();

    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));

    if (s.empty()) throw EmptyAnswer();
    return canonicalize_numeric(s);
}

std::optional<std::string> extract_answer(const Chain& chain, std::string_view marker) {
    if (chain.steps.empty() || marker.empty()) return std::nullopt;
    const std::string& text = chain.steps.back().text;

    // Case-insensitive search for the last occurrence.
    std::string hay(text), needle(marker);
    for (char& c : hay) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    for (char& c : needle) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    std::size_t pos = hay.rfind(needle);
    if (pos == std::string::npos) return std::nullopt;

    std::string tail = text.substr(pos + marker.size());
    try {
        return normalize_answer(tail);
    } catch (const EmptyAnswer&) {
        return std::nullopt;
    }
}

long long chain_tokens(const Chain& chain) {
    long long total = 0;
    for (const ThoughtStep& step : chain.steps) total += step.token_cost();
    return total;
}

namespace {

class Fnv1a {
public:
    void bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            hash_ ^= p[i];
            hash_ *= 0x100000001B3ull;
        }
    }
    void str(const std::string& s) {
        u64(s.size());
        bytes(s.data(), s.size());
    }
    void u64(std::uint64_t v) {
        unsigned char buf[8];
        for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
        bytes(buf, 8);
    }
    void i64(long long v) { u64(static_cast<std::uint64_t>(v)); }
    std::uint64_t value() const { return hash_; }

private:
    std::uint64_t hash_ = 0xCBF29CE484222325ull;
};

void hash_image(Fnv1a& h, const ToyImage& img) {
    h.i64(img.rows);
    h.i64(img.cols);
    for (int v : img.cells) h.i64(v);
}

}  // namespace

std::uint64_t chain_content_hash(const Chain& chain) {
    Fnv1a h;
    h.str(chain.problem_id);
    h.u64(chain.steps.size());
    for (const ThoughtStep& step : chain.steps) {
        h.str(step.text);
        h.u64(step.op.has_value() ? 1 : 0);
        if (step.op) {
            h.str(op_kind_name(step.op->kind));
            h.u64(step.op->args.size());
            for (const auto& [key, val] : step.op->args) {
                h.str(key);
                double d = val;
                std::uint64_t bits;
                static_assert(sizeof bits == sizeof d);
                std::memcpy(&bits, &d, sizeof bits);
                h.u64(bits);
            }
            h.str(step.op->source_code);
        }
        h.u64(step.produced_images.size());
        for (const ImageRef& ref : step.produced_images) {
            h.str(ref.handle);
            h.i64(ref.token_cost);
            if (ref.source == ImageSource::inline_matrix && ref.matrix) hash_image(h, *ref.matrix);
        }
        h.str(step.exec_error.value_or(""));
        h.u64(step.exec_error.has_value() ? 1 : 0);
        h.i64(step.prompt_tokens);
        h.i64(step.completion_tokens);
        h.u64(step.modality == Modality::multi_modal ? 1 : 0);
    }
    h.u64(chain.finished ? 1 : 0);
    h.u64(chain.truncated ? 1 : 0);
    h.str(chain.answer.value_or(""));
    h.u64(chain.answer.has_value() ? 1 : 0);
    return h.value();
}

void validate_chain(const Chain& chain) {
    auto fail = [&](const std::string& what) {
        throw std::logic_error("chain invariant violated (" + chain.problem_id + "): " + what);
    };
    if (chain.answer.has_value() != chain.finished) fail("answer present must match finished");
    if (chain.provenance.sample_index < 0) fail("sample index must be nonnegative");
    for (std::size_t i = 0; i < chain.steps.size(); ++i) {
        const ThoughtStep& step = chain.steps[i];
        if (step.prompt_tokens < 0 || step.completion_tokens < 0) fail("negative token count");
        if (!step.produced_images.empty()) {
            if (!step.op) fail("produced images without an op");
            if (step.exec_error) fail("produced images alongside exec_error");
        }
        if (step.exec_error && !step.produced_images.empty()) fail("exec_error with images");
        if (step.modality == Modality::text_only && (step.op || !step.produced_images.empty()))
            fail("text-only step carrying visual state");
        for (const ImageRef& ref : step.produced_images) {
            if (ref.token_cost < 0) fail("negative image token cost");
            if (ref.origin_step < 0 || ref.origin_step > static_cast<int>(i))
                fail("produced image origin outside the chain");
        }
    }
}

}  // namespace scalesearch
