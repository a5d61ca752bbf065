package com.example.app;

import com.example.util.Text;
import java.util.List;

public class Main {
    public static String buildKey(String raw) {
        String key = Text.withPrefix(raw);
        return key;
    }

    public static String joinKeys(List<String> keys) {
        String out = "";
        for (String k : keys) {
            out = out + Text.PREFIX + k;
        }
        return out;
    }
}
