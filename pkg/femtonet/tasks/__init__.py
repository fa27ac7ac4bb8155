# Tasks package initialization
