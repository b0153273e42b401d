// optional dependency, resolved at runtime when installed
declare module "@huggingface/transformers";
