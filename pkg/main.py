#!/usr/bin/env python3
# 外部ビリヤードの計算ツール
from src.cli import main

# エントリーポイント
if __name__ == "__main__":
    main()
