import { describe, expect, it } from 'vitest';

import { ApiClient, ApiError } from '../src/api.js';

function fakeFetch(routes: Record<string, { status?: number; body: unknown }>) {
  const seen: Array<{ url: string; init?: RequestInit }> = [];
  const fetchFn = async (url: string, init?: RequestInit): Promise<Response> => {
    seen.push({ url, init });
    const route = routes[url.split('?')[0]];
    if (!route) throw new Error(`no route for ${url}`);
    return new Response(JSON.stringify(route.body), {
      status: route.status ?? 200,
      headers: { 'content-type': 'application/json' },
    });
  };
  return { fetchFn, seen };
}

describe('ApiClient', () => {
  it('posts chat turns with the session id', async () => {
    const { fetchFn, seen } = fakeFetch({
      '/v1/chat': { body: { session_id: 's', utterance: 'hi', reply: 'ok',
                            end_of_exchange: true, turn_seq: 1, suggestions: [] } },
    });
    const client = new ApiClient('', fetchFn);
    const response = await client.chat('s', 'hi');
    expect(response.reply).toBe('ok');
    expect(JSON.parse(String(seen[0].init?.body)))
      .toEqual({ session_id: 's', utterance: 'hi' });
  });

  it('surfaces the machine-readable error envelope', async () => {
    const { fetchFn } = fakeFetch({
      '/v1/sim/clock': { status: 409, body: { error: { code: 'wall_clock',
                                                        message: 'nope' } } },
    });
    const client = new ApiClient('', fetchFn);
    await expect(client.advanceClock(60)).rejects.toMatchObject({
      name: 'ApiError', status: 409, code: 'wall_clock',
    });
  });

  it('builds the log query string', async () => {
    const { fetchFn, seen } = fakeFetch({ '/v1/log': { body: { entries: [] } } });
    await new ApiClient('', fetchFn).log(7);
    expect(seen[0].url).toBe('/v1/log?since=7');
  });

  it('prefixes a base url', async () => {
    const { fetchFn, seen } = fakeFetch({
      'http://host:1/v1/rules': { body: { rules: [] } },
    });
    await new ApiClient('http://host:1', fetchFn).rules();
    expect(seen[0].url).toBe('http://host:1/v1/rules');
  });

  it('throws ApiError even without a json body', async () => {
    const fetchFn = async () => new Response('not json', { status: 500 });
    await expect(new ApiClient('', fetchFn).rules()).rejects.toBeInstanceOf(ApiError);
  });
});
