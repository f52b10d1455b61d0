from protoweave.cli import entry

entry()
