#include "mock/mock_server.hpp"

int main(int argc, char **argv) { return liverec::mock::run_mock_adapter(argc, argv); }
