# Scripts package
