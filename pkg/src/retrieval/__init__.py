"""
This package contains the knowledge retrieval used to answer validation questions.
Including a web search client, a local corpus and model self-inquiry.
"""
