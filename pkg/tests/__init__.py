# Tests package for the Dependency Translator
