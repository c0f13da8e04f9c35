// Test double for the external-command adapter. Modes:
//   echo       read the request, return its images unchanged
//   increment  return the images with every cell incremented (mod 256)
//   fail       exit nonzero with a message on stderr
//   garbage    print non-JSON output
//   sleep      block far beyond any test timeout
#include <unistd.h>

#include <iostream>
#include <string>

#include "json.hpp"

int main(int argc, char** argv) {
    const std::string mode = argc > 1 ? argv[1] : "echo";

    if (mode == "fail") {
        std::cerr << "synthetic tool failure";
        return 3;
    }
    if (mode == "sleep") {
        ::sleep(30);
        return 0;
    }

    std::string input((std::istreambuf_iterator<char>(std::cin)),
                      std::istreambuf_iterator<char>());
    if (mode == "garbage") {
        std::cout << "this is not json";
        return 0;
    }

    nlohmann::json request = nlohmann::json::parse(input);
    nlohmann::json response;
    response["images"] = request.value("images", nlohmann::json::array());
    if (mode == "increment") {
        for (auto& image : response["images"])
            for (auto& cell : image["cells"]) cell = (cell.get<int>() + 1) % 256;
    }
    std::cout << response.dump();
    return 0;
}
